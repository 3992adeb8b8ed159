//! Planar cubic spline through curve nodes, parametrised by cumulative chord
//! length with not-a-knot end conditions.

use crate::banded::BandedMatrix;
use crate::curve::Point;
use crate::error::CurveError;

// Five-point Gauss-Legendre rule on [-1, 1].
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_1,
];

#[derive(Debug, Clone)]
pub struct CubicSpline2 {
    knots: Vec<f64>,
    pts: Vec<Point>,
    mx: Vec<f64>,
    my: Vec<f64>,
    /// cumulative arc length of the spline at each knot
    arc: Vec<f64>,
}

impl CubicSpline2 {
    /// Interpolates `points` (at least four). Coincident consecutive points are
    /// rejected with the offending index.
    pub fn through(points: &[Point]) -> Result<Self, CurveError> {
        let n = points.len() - 1;
        if n < 3 {
            return Err(CurveError::TooFewNodes { min: 3, got: n });
        }
        let mut knots = Vec::with_capacity(n + 1);
        knots.push(0.0);
        for i in 0..n {
            let d = dist(points[i], points[i + 1]);
            if d <= 0.0 {
                return Err(CurveError::Degenerate { index: i });
            }
            knots.push(knots[i] + d);
        }
        let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
        let mx = second_derivatives(&knots, &xs)?;
        let my = second_derivatives(&knots, &ys)?;
        let mut spline = Self {
            knots,
            pts: points.to_vec(),
            mx,
            my,
            arc: Vec::new(),
        };
        let mut arc = Vec::with_capacity(n + 1);
        arc.push(0.0);
        for i in 0..n {
            let len = spline.partial_arc(i, spline.span_width(i));
            arc.push(arc[i] + len);
        }
        spline.arc = arc;
        Ok(spline)
    }

    pub fn spans(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn span_width(&self, span: usize) -> f64 {
        self.knots[span + 1] - self.knots[span]
    }

    /// Total arc length of the interpolant.
    pub fn arc_length(&self) -> f64 {
        *self.arc.last().unwrap()
    }

    fn coeffs(v0: f64, v1: f64, m0: f64, m1: f64, h: f64) -> [f64; 4] {
        let b = (v1 - v0) / h - h * (2.0 * m0 + m1) / 6.0;
        [v0, b, 0.5 * m0, (m1 - m0) / (6.0 * h)]
    }

    /// Position at local offset `u` within `span`.
    pub fn eval(&self, span: usize, u: f64) -> Point {
        let h = self.span_width(span);
        let cx = Self::coeffs(
            self.pts[span][0],
            self.pts[span + 1][0],
            self.mx[span],
            self.mx[span + 1],
            h,
        );
        let cy = Self::coeffs(
            self.pts[span][1],
            self.pts[span + 1][1],
            self.my[span],
            self.my[span + 1],
            h,
        );
        [
            cx[0] + u * (cx[1] + u * (cx[2] + u * cx[3])),
            cy[0] + u * (cy[1] + u * (cy[2] + u * cy[3])),
        ]
    }

    /// Parametric derivative at local offset `u` within `span`.
    pub fn derivative(&self, span: usize, u: f64) -> Point {
        let h = self.span_width(span);
        let cx = Self::coeffs(
            self.pts[span][0],
            self.pts[span + 1][0],
            self.mx[span],
            self.mx[span + 1],
            h,
        );
        let cy = Self::coeffs(
            self.pts[span][1],
            self.pts[span + 1][1],
            self.my[span],
            self.my[span + 1],
            h,
        );
        [
            cx[1] + u * (2.0 * cx[2] + 3.0 * u * cx[3]),
            cy[1] + u * (2.0 * cy[2] + 3.0 * u * cy[3]),
        ]
    }

    fn speed(&self, span: usize, u: f64) -> f64 {
        let d = self.derivative(span, u);
        d[0].hypot(d[1])
    }

    /// Arc length from the start of `span` to local offset `u`.
    fn partial_arc(&self, span: usize, u: f64) -> f64 {
        let half = 0.5 * u;
        GL_NODES
            .iter()
            .zip(GL_WEIGHTS)
            .map(|(&z, w)| w * self.speed(span, half * (1.0 + z)))
            .sum::<f64>()
            * half
    }

    /// Point at arc length `s` from the start of the spline.
    pub fn point_at_arc(&self, s: f64) -> Point {
        let n = self.spans();
        let span = match self.arc.partition_point(|&a| a <= s) {
            0 => 0,
            k => (k - 1).min(n - 1),
        };
        let target = s - self.arc[span];
        let h = self.span_width(span);
        let span_len = self.arc[span + 1] - self.arc[span];
        let mut u = (target / span_len * h).clamp(0.0, h);
        for _ in 0..30 {
            let g = self.partial_arc(span, u) - target;
            let step = g / self.speed(span, u);
            let next = (u - step).clamp(0.0, h);
            let moved = (next - u).abs();
            u = next;
            if moved <= 4.0 * f64::EPSILON * h {
                break;
            }
        }
        self.eval(span, u)
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

// Second derivatives at the knots for a not-a-knot cubic spline.
fn second_derivatives(t: &[f64], v: &[f64]) -> Result<Vec<f64>, CurveError> {
    let n = t.len() - 1;
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let mut a = BandedMatrix::zeros(n + 1, 2, 2);
    let mut rhs = vec![0.0; n + 1];
    a.add(0, 0, h[1]);
    a.add(0, 1, -(h[0] + h[1]));
    a.add(0, 2, h[0]);
    for i in 1..n {
        a.add(i, i - 1, h[i - 1]);
        a.add(i, i, 2.0 * (h[i - 1] + h[i]));
        a.add(i, i + 1, h[i]);
        rhs[i] = 6.0 * ((v[i + 1] - v[i]) / h[i] - (v[i] - v[i - 1]) / h[i - 1]);
    }
    a.add(n, n - 2, h[n - 1]);
    a.add(n, n - 1, -(h[n - 2] + h[n - 1]));
    a.add(n, n, h[n - 2]);
    Ok(a.factor()?.solve(&rhs))
}
