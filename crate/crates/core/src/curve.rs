//! Discrete open curves pinned to two vertical lines, and their arc-length
//! geometry.
//!
//! The boundary conditions are never imposed through one-sided formulas.
//! Instead the curve is continued past each line by reflection: the ghost
//! node `-j` is node `j` mirrored across `x = line_left` (and likewise on the
//! right). The reflected polygon meets the line perpendicularly and its
//! curvature is an even function about the endpoint, so every odd arc-length
//! derivative computed with a symmetric stencil vanishes there.

use serde::{Deserialize, Serialize};

use crate::error::CurveError;
use crate::spline::CubicSpline2;

pub type Point = [f64; 2];

/// Minimum number of segments; the widest stencil spans seven nodes.
pub const MIN_SEGMENTS: usize = 16;

/// Ghost nodes per side needed by the seven-point fifth-derivative stencil.
pub const GHOSTS: usize = 3;

/// Relative spacing deviation tolerated by [`compute_geometry`].
pub const UNIFORM_TOL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteCurve {
    points: Vec<Point>,
    line_left: f64,
    line_right: f64,
}

impl DiscreteCurve {
    pub fn new(points: Vec<Point>, line_left: f64, line_right: f64) -> Result<Self, CurveError> {
        if !(line_left < line_right) {
            return Err(CurveError::BadLines {
                left: line_left,
                right: line_right,
            });
        }
        let n = points.len().saturating_sub(1);
        if n < MIN_SEGMENTS {
            return Err(CurveError::TooFewNodes {
                min: MIN_SEGMENTS,
                got: n,
            });
        }
        if let Some(index) = points
            .iter()
            .position(|p| !p[0].is_finite() || !p[1].is_finite())
        {
            return Err(CurveError::NonFinite { index });
        }
        if points[0][0] != line_left {
            return Err(CurveError::NotPinned {
                end: "left",
                x: points[0][0],
                line: line_left,
            });
        }
        if points[n][0] != line_right {
            return Err(CurveError::NotPinned {
                end: "right",
                x: points[n][0],
                line: line_right,
            });
        }
        if let Some(index) = points.windows(2).position(|w| w[0] == w[1]) {
            return Err(CurveError::Degenerate { index });
        }
        Ok(Self {
            points,
            line_left,
            line_right,
        })
    }

    /// Horizontal segment at height `y` with `n` equal segments.
    pub fn horizontal(n: usize, line_left: f64, line_right: f64, y: f64) -> Result<Self, CurveError> {
        let width = line_right - line_left;
        let mut points: Vec<Point> = (0..=n)
            .map(|i| [line_left + width * i as f64 / n as f64, y])
            .collect();
        if let Some(last) = points.last_mut() {
            last[0] = line_right;
        }
        Self::new(points, line_left, line_right)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Number of segments (one less than the node count).
    pub fn segments(&self) -> usize {
        self.points.len() - 1
    }

    pub fn line_left(&self) -> f64 {
        self.line_left
    }

    pub fn line_right(&self) -> f64 {
        self.line_right
    }

    /// Distance |e| between the boundary lines.
    pub fn gap(&self) -> f64 {
        self.line_right - self.line_left
    }

    pub fn polyline_length(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .sum()
    }
}

/// Arc-length geometry of a uniformly spaced discrete curve.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryProfile {
    /// Segment lengths, one per segment.
    pub ds: Vec<f64>,
    /// Nodal tangent angle, the mean of the two adjacent segment angles.
    pub theta: Vec<f64>,
    pub k: Vec<f64>,
    /// `k_derivs[j-1]` holds the j-th arc-length derivative of curvature.
    pub k_derivs: [Vec<f64>; 5],
    pub length: f64,
    /// Uniform arc spacing `length / segments` used by every stencil.
    pub spacing: f64,
    /// Unwrapped segment angles including one mirrored ghost segment on each
    /// side: entry `j + 1` belongs to segment `j`.
    pub segment_angles: Vec<f64>,
}

impl GeometryProfile {
    pub fn nodes(&self) -> usize {
        self.k.len()
    }

    pub fn k_s(&self) -> &[f64] {
        &self.k_derivs[0]
    }

    pub fn k_ss(&self) -> &[f64] {
        &self.k_derivs[1]
    }

    pub fn k_sss(&self) -> &[f64] {
        &self.k_derivs[2]
    }

    pub fn k_s4(&self) -> &[f64] {
        &self.k_derivs[3]
    }

    pub fn k_s5(&self) -> &[f64] {
        &self.k_derivs[4]
    }

    /// Unit normal at node `i`: the tangent rotated a quarter turn
    /// counter-clockwise, so that `γ_ss = k ν`.
    pub fn normal(&self, i: usize) -> Point {
        let (s, c) = self.theta[i].sin_cos();
        [-s, c]
    }

    /// Trapezoidal weights `∫ f ds ≈ Σ w_i f_i`.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.ds.len();
        let mut w = vec![0.0; n + 1];
        for (j, d) in self.ds.iter().enumerate() {
            w[j] += 0.5 * d;
            w[j + 1] += 0.5 * d;
        }
        w
    }

    /// Endpoint tangent angles extrapolated from the first two interior
    /// segments on each side, without using ghosts. Zero for a curve meeting
    /// both lines perpendicularly (left, right).
    pub fn endpoint_tangent_angles(&self) -> (f64, f64) {
        let a = &self.segment_angles;
        let n = self.ds.len();
        let left = 0.5 * (3.0 * a[1] - a[2]);
        let right = 0.5 * (3.0 * a[n] - a[n - 1]);
        (left, right)
    }
}

/// Wraps an angle difference into (-π, π].
fn wrap(mut d: f64) -> f64 {
    use std::f64::consts::PI;
    while d > PI {
        d -= 2.0 * PI;
    }
    while d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// Returns `curve` re-sampled with `m` segments of equal arc length along a
/// not-a-knot cubic spline through its nodes.
pub fn resample_uniform(curve: &DiscreteCurve, m: usize) -> Result<DiscreteCurve, CurveError> {
    if m < MIN_SEGMENTS {
        return Err(CurveError::TooFewNodes {
            min: MIN_SEGMENTS,
            got: m,
        });
    }
    let spline = CubicSpline2::through(curve.points())?;
    let total = spline.arc_length();
    let first = curve.points[0];
    let last = curve.points[curve.segments()];
    let mut points = Vec::with_capacity(m + 1);
    points.push(first);
    for j in 1..m {
        points.push(spline.point_at_arc(total * j as f64 / m as f64));
    }
    points.push(last);
    DiscreteCurve::new(points, curve.line_left, curve.line_right)
}

/// Nodes `-g..=n+g` of the mirror-extended curve; node `j` sits at index `j + g`.
pub fn mirror_extend(curve: &DiscreteCurve, g: usize) -> Result<Vec<Point>, CurveError> {
    let n = curve.segments();
    if g > n / 2 {
        return Err(CurveError::TooManyGhosts {
            ghosts: g,
            segments: n,
        });
    }
    let p = curve.points();
    let (a, b) = (curve.line_left, curve.line_right);
    let mut out = Vec::with_capacity(n + 1 + 2 * g);
    out.extend((1..=g).rev().map(|j| [2.0 * a - p[j][0], p[j][1]]));
    out.extend_from_slice(p);
    out.extend((1..=g).map(|j| [2.0 * b - p[n - j][0], p[n - j][1]]));
    Ok(out)
}

pub fn compute_geometry(curve: &DiscreteCurve) -> Result<GeometryProfile, CurveError> {
    let p = curve.points();
    let n = curve.segments();
    let ds: Vec<f64> = p
        .windows(2)
        .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
        .collect();
    if let Some(index) = ds.iter().position(|&d| d <= 0.0) {
        return Err(CurveError::Degenerate { index });
    }
    let length: f64 = ds.iter().sum();
    let h = length / n as f64;
    let deviation = ds.iter().fold(0.0_f64, |m, d| m.max((d - h).abs() / h));
    if deviation > UNIFORM_TOL {
        return Err(CurveError::NonUniform { deviation });
    }

    // Segment angles: index 0 is the left ghost, 1..=n the real segments,
    // n + 1 the right ghost.
    let mut phi = vec![0.0; n + 2];
    let raw = |j: usize| (p[j + 1][1] - p[j][1]).atan2(p[j + 1][0] - p[j][0]);
    phi[1] = raw(0);
    for j in 1..n {
        let d = wrap(raw(j) - phi[j]);
        if d.abs() > std::f64::consts::FRAC_PI_2 {
            return Err(CurveError::UnderResolved { index: j, jump: d });
        }
        phi[j + 1] = phi[j] + d;
    }
    // Reflection across a vertical line, traversed backwards, maps the
    // direction angle φ to -φ.
    let dl = wrap(-phi[1] - phi[1]);
    if dl.abs() > std::f64::consts::FRAC_PI_2 {
        return Err(CurveError::UnderResolved { index: 0, jump: dl });
    }
    phi[0] = phi[1] + dl;
    let dr = wrap(-phi[n] - phi[n]);
    if dr.abs() > std::f64::consts::FRAC_PI_2 {
        return Err(CurveError::UnderResolved { index: n, jump: dr });
    }
    phi[n + 1] = phi[n] + dr;

    let theta: Vec<f64> = (0..=n).map(|i| 0.5 * (phi[i] + phi[i + 1])).collect();
    let k: Vec<f64> = (0..=n).map(|i| (phi[i + 1] - phi[i]) / h).collect();

    // Curvature of the reflected curve is even about each endpoint.
    let g = GHOSTS;
    let mut ke = Vec::with_capacity(n + 1 + 2 * g);
    ke.extend((1..=g).rev().map(|j| k[j]));
    ke.extend_from_slice(&k);
    ke.extend((1..=g).map(|j| k[n - j]));

    let at = |i: usize, o: isize| ke[(i + g).wrapping_add_signed(o)];
    let (h2, h3, h4, h5) = (h * h, h * h * h, h.powi(4), h.powi(5));
    let mut d = [
        vec![0.0; n + 1],
        vec![0.0; n + 1],
        vec![0.0; n + 1],
        vec![0.0; n + 1],
        vec![0.0; n + 1],
    ];
    for i in 0..=n {
        let (m3, m2, m1, c, p1, p2, p3) = (
            at(i, -3),
            at(i, -2),
            at(i, -1),
            at(i, 0),
            at(i, 1),
            at(i, 2),
            at(i, 3),
        );
        // Grouped as symmetric pairs so that odd stencils vanish exactly on
        // even data.
        let (o1, o2, o3) = (p1 - m1, p2 - m2, p3 - m3);
        let (e1, e2) = (p1 + m1, p2 + m2);
        d[0][i] = o1 / (2.0 * h);
        d[1][i] = (e1 - 2.0 * c) / h2;
        d[2][i] = (o2 - 2.0 * o1) / (2.0 * h3);
        d[3][i] = (e2 - 4.0 * e1 + 6.0 * c) / h4;
        d[4][i] = (o3 - 4.0 * o2 + 5.0 * o1) / (2.0 * h5);
    }

    Ok(GeometryProfile {
        ds,
        theta,
        k,
        k_derivs: d,
        length,
        spacing: h,
        segment_angles: phi,
    })
}

/// Composite trapezoidal rule for `∫ field ds` over the profile's segments.
pub fn integrate(field: &[f64], profile: &GeometryProfile) -> Result<f64, CurveError> {
    if field.len() != profile.nodes() {
        return Err(CurveError::LengthMismatch {
            expected: profile.nodes(),
            got: field.len(),
        });
    }
    Ok(profile
        .ds
        .iter()
        .zip(field.windows(2))
        .map(|(d, f)| 0.5 * d * (f[0] + f[1]))
        .sum())
}
