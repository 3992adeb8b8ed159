//! Scalar diagnostics of a curve and of whole trajectories.

use std::f64::consts::PI;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::curve::{compute_geometry, integrate, DiscreteCurve, GeometryProfile, Point};
use crate::error::AnalysisError;
use crate::flow::{normal_speed, FlowConfig};

/// `(√1717 − 37)/174`, written as `2/(√1717 + 37)` to avoid cancellation.
pub fn small_energy_constant() -> f64 {
    2.0 / (1717.0_f64.sqrt() + 37.0)
}

/// Threshold `c₀π³` on the scale-invariant energy `‖k_s‖₂² L³`.
pub fn small_energy_threshold() -> f64 {
    small_energy_constant() * PI.powi(3)
}

/// `δ = c₀π³ − ‖k_s‖₂² L_ref³`. Negative values are meaningful: the small
/// energy hypothesis fails.
pub fn small_energy_margin(ksnorm2: f64, reference_length: f64) -> f64 {
    small_energy_threshold() - ksnorm2 * reference_length.powi(3)
}

pub fn winding_number(profile: &GeometryProfile) -> f64 {
    // integrate only fails on a length mismatch, impossible for the profile's own k
    integrate(&profile.k, profile).expect("k matches profile") / (2.0 * PI)
}

/// Odd curvature derivatives at the two endpoints, `[left, right]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryResiduals {
    pub ks: [f64; 2],
    pub ksss: [f64; 2],
    pub ks5: [f64; 2],
}

impl BoundaryResiduals {
    pub fn of(profile: &GeometryProfile) -> Self {
        let n = profile.nodes() - 1;
        let ends = |v: &[f64]| [v[0].abs(), v[n].abs()];
        Self {
            ks: ends(profile.k_s()),
            ksss: ends(profile.k_sss()),
            ks5: ends(profile.k_s5()),
        }
    }

    pub fn max(&self) -> f64 {
        self.ks
            .iter()
            .chain(&self.ksss)
            .chain(&self.ks5)
            .fold(0.0, |m, v| m.max(*v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub omega: f64,
    pub length: f64,
    /// `½∫k_s² ds`
    pub energy: f64,
    pub knorm2: f64,
    pub ksnorm2: f64,
    pub kssnorm2: f64,
    pub k_inf: f64,
    pub ks_inf: f64,
    /// δ against the run's initial length.
    pub delta_margin: f64,
    /// δ against the current length.
    pub delta_margin_current: f64,
    /// `∫F² ds`
    pub dissipation: f64,
    /// `‖F‖_∞`
    pub speed_inf: f64,
    pub bc_residuals: BoundaryResiduals,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l2sq(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(a, b)| a * a * b).sum()
}

impl DiagnosticsRecord {
    pub fn measure(time: f64, profile: &GeometryProfile, reference_length: f64) -> Self {
        let w = profile.weights();
        let f = normal_speed(profile);
        let ksnorm2 = l2sq(profile.k_s(), &w);
        Self {
            time,
            omega: winding_number(profile),
            length: profile.length,
            energy: 0.5 * ksnorm2,
            knorm2: l2sq(&profile.k, &w),
            ksnorm2,
            kssnorm2: l2sq(profile.k_ss(), &w),
            k_inf: sup(&profile.k),
            ks_inf: sup(profile.k_s()),
            delta_margin: small_energy_margin(ksnorm2, reference_length),
            delta_margin_current: small_energy_margin(ksnorm2, profile.length),
            dissipation: l2sq(&f, &w),
            speed_inf: sup(&f),
            bc_residuals: BoundaryResiduals::of(profile),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub step: u64,
    pub curve: DiscreteCurve,
    pub record: DiagnosticsRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "reason")]
pub enum Termination {
    /// Reached `t_end`.
    Horizon,
    MaxSteps,
    /// `‖k‖_∞` fell below `stop_knorm`.
    Converged,
    Failed { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config: FlowConfig,
    pub termination: Termination,
    pub steps: u64,
    pub rejected_steps: u64,
    pub initial_length: f64,
    /// Excluded from byte-stable outputs.
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub metadata: RunMetadata,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn series(&self, pick: impl Fn(&DiagnosticsRecord) -> f64) -> Vec<(f64, f64)> {
        self.snapshots
            .iter()
            .map(|s| (s.time, pick(&s.record)))
            .collect()
    }

    /// Geometry of every snapshot, recomputed from the stored curves.
    pub fn profiles(&self) -> Result<Vec<GeometryProfile>, AnalysisError> {
        self.snapshots
            .iter()
            .map(|s| compute_geometry(&s.curve).map_err(AnalysisError::from))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub r_squared: f64,
}

/// Least-squares fit of `log(value)` against time over `window`; the rate
/// is minus the slope.
pub fn fit_decay_rate(series: &[(f64, f64)], window: Range<usize>) -> Result<DecayFit, AnalysisError> {
    if window.end > series.len() || window.start > window.end {
        return Err(AnalysisError::BadWindow {
            start: window.start,
            end: window.end,
            len: series.len(),
        });
    }
    if window.len() < 5 {
        return Err(AnalysisError::TooFewSamples {
            needed: 5,
            got: window.len(),
        });
    }
    let mut pts = Vec::with_capacity(window.len());
    for index in window {
        let (t, v) = series[index];
        if !(v > 0.0) {
            return Err(AnalysisError::NonPositive { index, value: v });
        }
        pts.push((t, v.ln()));
    }
    let m = pts.len() as f64;
    let tbar = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let stt: f64 = pts.iter().map(|p| (p.0 - tbar).powi(2)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - tbar) * (p.1 - ybar)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - ybar).powi(2)).sum();
    let slope = sty / stt;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sty * sty) / (stt * syy)
    };
    Ok(DecayFit {
        rate: -slope,
        r_squared,
    })
}

/// Snapshots of the asymptotic regime: from the first value below half the
/// initial one, up to (excluding) the first value below `floor` times the
/// initial one.
pub fn post_transient_window(values: &[f64], floor: f64) -> Range<usize> {
    let Some(&v0) = values.first() else {
        return 0..0;
    };
    let start = values
        .iter()
        .position(|&v| v < 0.5 * v0)
        .unwrap_or(values.len());
    let end = values[start..]
        .iter()
        .position(|&v| v < floor * v0)
        .map_or(values.len(), |p| start + p);
    start..end
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Displacement {
    pub sup_displacement: f64,
    pub speed_integral: f64,
    /// `(time, running sup displacement, running speed integral)` per snapshot.
    pub history: Vec<(f64, f64, f64)>,
}

// Point at normalised arc-length fraction `f` along a polyline.
fn point_at_fraction(points: &[Point], cumulative: &[f64], f: f64) -> Point {
    let total = *cumulative.last().unwrap();
    let s = f * total;
    let j = cumulative
        .partition_point(|&c| c <= s)
        .clamp(1, cumulative.len() - 1)
        - 1;
    let seg = cumulative[j + 1] - cumulative[j];
    let u = ((s - cumulative[j]) / seg).clamp(0.0, 1.0);
    let (a, b) = (points[j], points[j + 1]);
    [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])]
}

fn cumulative_lengths(points: &[Point]) -> Vec<f64> {
    let mut c = Vec::with_capacity(points.len());
    c.push(0.0);
    for w in points.windows(2) {
        let last = *c.last().unwrap();
        c.push(last + (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]));
    }
    c
}

/// Largest movement of any material point from the initial curve, matched by
/// normalised arc-length fraction, against the time integral of `‖F‖_∞`.
pub fn displacement_integral(trajectory: &Trajectory) -> Result<Displacement, AnalysisError> {
    let snaps = &trajectory.snapshots;
    if snaps.len() < 2 {
        return Err(AnalysisError::TooFewSamples {
            needed: 2,
            got: snaps.len(),
        });
    }
    let first = snaps[0].curve.points();
    let nodes = first.len();
    let first_cum = cumulative_lengths(first);
    let mut sup_disp: f64 = 0.0;
    let mut integral = 0.0;
    let mut history = Vec::with_capacity(snaps.len());
    history.push((snaps[0].time, 0.0, 0.0));
    for (index, pair) in snaps.windows(2).enumerate() {
        let (prev, cur) = (&pair[0], &pair[1]);
        let pts = cur.curve.points();
        if pts.len() != nodes {
            return Err(AnalysisError::NodeCountMismatch {
                index: index + 1,
                expected: nodes,
                got: pts.len(),
            });
        }
        let cum = cumulative_lengths(pts);
        let total = *cum.last().unwrap();
        for (p, c) in pts.iter().zip(&cum) {
            let q = point_at_fraction(first, &first_cum, c / total);
            sup_disp = sup_disp.max((p[0] - q[0]).hypot(p[1] - q[1]));
        }
        integral += 0.5 * (cur.time - prev.time) * (prev.record.speed_inf + cur.record.speed_inf);
        history.push((cur.time, sup_disp, integral));
    }
    Ok(Displacement {
        sup_displacement: sup_disp,
        speed_integral: integral,
        history,
    })
}
