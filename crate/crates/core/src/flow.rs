//! Normal speed and the linearly implicit time stepper.
//!
//! Each step solves
//!
//! ```text
//! (I − dt·D⁶) γⁿ⁺¹ = γⁿ + dt·(F ν − D⁶ γⁿ)
//! ```
//!
//! per coordinate, where `D⁶` is the seven-point sixth difference in the
//! current arc spacing applied on the mirror-extended nodes. Since
//! `∂_s⁶γ = k_{s⁴} ν + …`, the stiff part is implicit and the remainder is
//! explicit. The curve is then re-pinned and resampled to uniform arc length.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::banded::BandedMatrix;
use crate::curve::{
    compute_geometry, resample_uniform, DiscreteCurve, GeometryProfile, Point, MIN_SEGMENTS,
};
use crate::diagnostics::{
    winding_number, DiagnosticsRecord, RunMetadata, Snapshot, Termination, Trajectory,
};
use crate::error::{CurveError, FlowError, StepError};

const SIXTH_DIFF: [f64; 7] = [1.0, -6.0, 15.0, -20.0, 15.0, -6.0, 1.0];

/// Halvings of a rejected step before the run is abandoned.
pub const MAX_HALVINGS: u32 = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    /// Number of segments.
    pub n: usize,
    pub dt_safety: f64,
    pub t_end: f64,
    pub snapshot_every: u64,
    pub line_left: f64,
    pub line_right: f64,
    /// Stop once `‖k‖_∞` drops below this; zero disables the test.
    pub stop_knorm: f64,
    pub max_steps: u64,
}

impl FlowConfig {
    pub const DEFAULT_DT_SAFETY: f64 = 0.1;
    pub const DEFAULT_SNAPSHOT_EVERY: u64 = 100;
    pub const DEFAULT_STOP_KNORM: f64 = 1e-10;
    pub const DEFAULT_MAX_STEPS: u64 = 100_000_000;

    /// Configuration with every optional field at its default and the lines
    /// at `x = ±1`.
    pub fn new(n: usize, t_end: f64) -> Self {
        Self {
            n,
            dt_safety: Self::DEFAULT_DT_SAFETY,
            t_end,
            snapshot_every: Self::DEFAULT_SNAPSHOT_EVERY,
            line_left: -1.0,
            line_right: 1.0,
            stop_knorm: Self::DEFAULT_STOP_KNORM,
            max_steps: Self::DEFAULT_MAX_STEPS,
        }
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        let fail = |m: &str| Err(FlowError::Config(m.to_string()));
        if self.n < MIN_SEGMENTS {
            return fail("n: must be >= 16");
        }
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return fail("dt_safety: must lie in (0, 1]");
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return fail("t_end: must be positive and finite");
        }
        if self.snapshot_every == 0 {
            return fail("snapshot_every: must be >= 1");
        }
        if !(self.line_left < self.line_right) {
            return fail("line_right: must exceed line_left");
        }
        if !(self.stop_knorm >= 0.0) {
            return fail("stop_knorm: must be >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    curve: DiscreteCurve,
    time: f64,
    step_index: u64,
    profile: GeometryProfile,
}

impl FlowState {
    pub fn new(curve: DiscreteCurve) -> Result<Self, CurveError> {
        let profile = compute_geometry(&curve)?;
        Ok(Self {
            curve,
            time: 0.0,
            step_index: 0,
            profile,
        })
    }

    pub fn curve(&self) -> &DiscreteCurve {
        &self.curve
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn profile(&self) -> &GeometryProfile {
        &self.profile
    }
}

/// `F = k_{s⁴} + k² k_ss − ½ k k_s²` at every node.
pub fn normal_speed(profile: &GeometryProfile) -> Vec<f64> {
    profile
        .k
        .iter()
        .zip(profile.k_s())
        .zip(profile.k_ss())
        .zip(profile.k_s4())
        .map(|(((k, ks), kss), ks4)| ks4 + k * k * kss - 0.5 * k * ks * ks)
        .collect()
}

/// `dt_safety · h²`, shortened so the step does not pass `t_end`.
pub fn select_dt(state: &FlowState, config: &FlowConfig) -> f64 {
    let h = state.profile.spacing;
    let dt = config.dt_safety * h * h;
    dt.min(config.t_end - state.time)
}

// Folds an extended index back onto 0..=n; the flag marks reflected nodes.
fn reflect(idx: isize, n: usize) -> (usize, bool) {
    if idx < 0 {
        ((-idx) as usize, true)
    } else if idx > n as isize {
        ((2 * n as isize - idx) as usize, true)
    } else {
        (idx as usize, false)
    }
}

pub fn step(state: &FlowState, dt: f64) -> Result<FlowState, StepError> {
    let step = state.step_index;
    let fatal = |source| StepError::Fatal { step, source };
    let rejected = |source| StepError::Rejected { step, source };

    let curve = &state.curve;
    let profile = &state.profile;
    let n = curve.segments();
    let (a, b) = (curve.line_left(), curve.line_right());
    let h = profile.spacing;
    let c = dt / h.powi(6);

    // In terms of the increment δ = γⁿ⁺¹ − γⁿ the scheme reads
    // (I − dt·D⁶) δ = dt·F ν, with δ_y even and δ_x odd about each line.
    let speed = normal_speed(profile);
    let pts = curve.points();

    let mut mx = BandedMatrix::zeros(n + 1, 3, 3);
    let mut my = BandedMatrix::zeros(n + 1, 3, 3);
    let mut rx = vec![0.0; n + 1];
    let mut ry = vec![0.0; n + 1];
    for i in 0..=n {
        let nu = profile.normal(i);
        rx[i] = dt * speed[i] * nu[0];
        ry[i] = dt * speed[i] * nu[1];
        mx.add(i, i, 1.0);
        my.add(i, i, 1.0);
        for (o, w) in SIXTH_DIFF.iter().enumerate() {
            let (col, mirrored) = reflect(i as isize + o as isize - 3, n);
            my.add(i, col, -c * w);
            mx.add(i, col, if mirrored { c * w } else { -c * w });
        }
    }
    mx.set_identity_row(0, 1.0);
    mx.set_identity_row(n, 1.0);
    rx[0] = 0.0;
    rx[n] = 0.0;

    let dx = mx.factor().map_err(fatal)?.solve(&rx);
    let dy = my.factor().map_err(fatal)?.solve(&ry);
    let mut moved: Vec<Point> = pts
        .iter()
        .zip(dx.iter().zip(&dy))
        .map(|(p, (u, v))| [p[0] + u, p[1] + v])
        .collect();
    moved[0][0] = a;
    moved[n][0] = b;

    for (index, w) in moved.windows(2).enumerate() {
        let d = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
        if !(d > 0.25 * h && d < 4.0 * h) {
            return Err(rejected(CurveError::Degenerate { index }));
        }
    }
    let next = DiscreteCurve::new(moved, a, b).map_err(rejected)?;
    let next = resample_uniform(&next, n).map_err(rejected)?;
    let profile = compute_geometry(&next).map_err(rejected)?;
    Ok(FlowState {
        curve: next,
        time: state.time + dt,
        step_index: step + 1,
        profile,
    })
}

fn snapshot(state: &FlowState, reference_length: f64) -> Snapshot {
    Snapshot {
        time: state.time,
        step: state.step_index,
        curve: state.curve.clone(),
        record: DiagnosticsRecord::measure(state.time, &state.profile, reference_length),
    }
}

/// Runs the flow until `t_end`, `max_steps`, or `‖k‖_∞ < stop_knorm`.
pub fn run_flow(config: &FlowConfig, initial: &DiscreteCurve) -> Result<Trajectory, FlowError> {
    config.validate()?;
    if initial.line_left() != config.line_left || initial.line_right() != config.line_right {
        return Err(FlowError::Config(
            "initial curve is not pinned to the configured lines".into(),
        ));
    }
    let started = Instant::now();
    let curve = match compute_geometry(initial) {
        Ok(_) if initial.segments() == config.n => initial.clone(),
        _ => resample_uniform(initial, config.n)?,
    };
    let mut state = FlowState::new(curve)?;
    let omega = winding_number(&state.profile);
    if omega.abs() > 0.1 {
        return Err(FlowError::Winding { omega });
    }
    let l0 = state.profile.length;
    let mut snapshots = vec![snapshot(&state, l0)];
    let mut rejected_steps = 0;
    let horizon_slack = 1e-12 * config.t_end;

    let termination = loop {
        let k_inf = snapshots
            .last()
            .filter(|s| s.step == state.step_index)
            .map(|s| s.record.k_inf)
            .unwrap_or_else(|| state.profile.k.iter().fold(0.0, |m, v| m.max(v.abs())));
        if k_inf < config.stop_knorm {
            break Termination::Converged;
        }
        if config.t_end - state.time <= horizon_slack {
            break Termination::Horizon;
        }
        if state.step_index >= config.max_steps {
            break Termination::MaxSteps;
        }
        let h = state.profile.spacing;
        let mut dt = select_dt(&state, config);
        let mut halvings = 0;
        let next = loop {
            match step(&state, dt) {
                Ok(next) => break Ok(next),
                Err(StepError::Rejected { .. })
                    if halvings < MAX_HALVINGS && dt / 2.0 >= 1e-14 * h * h =>
                {
                    halvings += 1;
                    rejected_steps += 1;
                    dt /= 2.0;
                }
                Err(e) => break Err(e),
            }
        };
        match next {
            Ok(next) => state = next,
            Err(e) => {
                break Termination::Failed {
                    message: e.to_string(),
                }
            }
        }
        if state.step_index % config.snapshot_every == 0 {
            snapshots.push(snapshot(&state, l0));
        }
    };
    if snapshots.last().map(|s| s.step) != Some(state.step_index) {
        snapshots.push(snapshot(&state, l0));
    }
    Ok(Trajectory {
        snapshots,
        metadata: RunMetadata {
            config: config.clone(),
            termination,
            steps: state.step_index,
            rejected_steps,
            initial_length: l0,
            wall_time_s: started.elapsed().as_secs_f64(),
        },
    })
}
