//! Configuration documents, initial curves and output files.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curve::{compute_geometry, resample_uniform, DiscreteCurve, Point};
use crate::diagnostics::{small_energy_margin, small_energy_threshold, Termination, Trajectory};
use crate::error::{CurveError, IoError};
use crate::flow::FlowConfig;
use crate::verify::CheckReport;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    CosineGraph,
    Flat,
    CustomFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialSpec {
    pub kind: InitialKind,
    pub amplitude: f64,
    pub mode: u32,
    pub n: usize,
    pub line_left: f64,
    pub line_right: f64,
    /// snapshots.json to read for `custom-file`.
    pub file: Option<PathBuf>,
    /// Frame index within `file`; negative counts from the end.
    pub frame: i64,
}

impl InitialSpec {
    pub fn cosine(amplitude: f64, mode: u32, n: usize) -> Self {
        Self {
            kind: InitialKind::CosineGraph,
            amplitude,
            mode,
            n,
            line_left: -1.0,
            line_right: 1.0,
            file: None,
            frame: -1,
        }
    }

    pub fn validate(&self) -> Result<(), IoError> {
        let half_gap = 0.5 * (self.line_right - self.line_left);
        if self.kind == InitialKind::CosineGraph {
            if !(self.amplitude.abs() < half_gap) {
                return Err(IoError::Config(format!(
                    "A: |A| must be below half the line gap ({half_gap})"
                )));
            }
            if self.mode < 1 {
                return Err(IoError::Config("m: must be >= 1".into()));
            }
        }
        if self.kind == InitialKind::CustomFile && self.file.is_none() {
            return Err(IoError::Config(
                "init_file: required when init = \"custom-file\"".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialCurve {
    pub curve: DiscreteCurve,
    /// `‖k_s‖₂² L₀³`
    pub energy_product: f64,
    pub threshold: f64,
    pub delta_margin: f64,
    pub warning: Option<String>,
}

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

fn gauss(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    GL_NODES
        .iter()
        .zip(GL_WEIGHTS)
        .map(|(z, w)| w * f(mid + half * z))
        .sum::<f64>()
        * half
}

/// Samples the graph `y = A cos(mπ(ξ+1)/2)`, `ξ ∈ [-1, 1]` mapped onto the
/// line gap, at `n + 1` points of exactly equal arc length.
fn cosine_graph(spec: &InitialSpec) -> Result<DiscreteCurve, CurveError> {
    let (a, b, n) = (spec.line_left, spec.line_right, spec.n);
    if spec.amplitude == 0.0 {
        return DiscreteCurve::horizontal(n, a, b, 0.0);
    }
    let freq = spec.mode as f64 * std::f64::consts::PI / (b - a);
    let amp = spec.amplitude;
    let y = |x: f64| amp * (freq * (x - a)).cos();
    let speed = |x: f64| {
        let dy = -amp * freq * (freq * (x - a)).sin();
        (1.0 + dy * dy).sqrt()
    };
    let panels = 16 * n;
    let width = (b - a) / panels as f64;
    let mut cum = Vec::with_capacity(panels + 1);
    cum.push(0.0);
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let last = *cum.last().unwrap();
        cum.push(last + gauss(speed, lo, lo + width));
    }
    let total = cum[panels];
    let mut points: Vec<Point> = Vec::with_capacity(n + 1);
    points.push([a, y(a)]);
    for j in 1..n {
        let target = total * j as f64 / n as f64;
        let p = cum.partition_point(|&c| c <= target).clamp(1, panels) - 1;
        let lo = a + p as f64 * width;
        let mut x = lo + width * (target - cum[p]) / (cum[p + 1] - cum[p]);
        for _ in 0..50 {
            let g = cum[p] + gauss(speed, lo, x) - target;
            let dx = g / speed(x);
            x -= dx;
            if dx.abs() <= 2.0 * f64::EPSILON * width {
                break;
            }
        }
        points.push([x, y(x)]);
    }
    points.push([b, y(b)]);
    DiscreteCurve::new(points, a, b)
}

fn read_frame(path: &Path, frame: i64, spec: &InitialSpec) -> Result<DiscreteCurve, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.into(),
        source,
    })?;
    let doc: SnapshotsDoc = serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.into(),
        source,
    })?;
    let count = doc.frames.len() as i64;
    let index = if frame < 0 { count + frame } else { frame };
    if index < 0 || index >= count {
        return Err(IoError::Config(format!(
            "init_frame: {frame} out of range for {count} frames"
        )));
    }
    let points = doc.frames[index as usize].points.clone();
    let curve = DiscreteCurve::new(points, spec.line_left, spec.line_right)?;
    if curve.segments() == spec.n && compute_geometry(&curve).is_ok() {
        Ok(curve)
    } else {
        Ok(resample_uniform(&curve, spec.n)?)
    }
}

pub fn generate_initial(spec: &InitialSpec) -> Result<InitialCurve, IoError> {
    spec.validate()?;
    let curve = match spec.kind {
        InitialKind::Flat => DiscreteCurve::horizontal(spec.n, spec.line_left, spec.line_right, 0.0)?,
        InitialKind::CosineGraph => cosine_graph(spec)?,
        InitialKind::CustomFile => read_frame(spec.file.as_deref().unwrap(), spec.frame, spec)?,
    };
    let profile = compute_geometry(&curve)?;
    let w = profile.weights();
    let ksnorm2: f64 = profile.k_s().iter().zip(&w).map(|(v, w)| v * v * w).sum();
    let energy_product = ksnorm2 * profile.length.powi(3);
    let threshold = small_energy_threshold();
    let delta_margin = small_energy_margin(ksnorm2, profile.length);
    let warning = (delta_margin <= 0.0).then(|| {
        format!(
            "small-energy condition not met: ‖k_s‖₂²L₀³ = {energy_product:.6} >= {threshold:.6}"
        )
    });
    Ok(InitialCurve {
        curve,
        energy_product,
        threshold,
        delta_margin,
        warning,
    })
}

/// Grid of parameters for `sweep`; every combination becomes one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(rename = "A")]
    pub amplitude: Vec<f64>,
    #[serde(rename = "m")]
    pub mode: Vec<u32>,
    pub n: Vec<usize>,
}

// Raw document; every optional key is listed with its default in the README.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n: usize,
    t_end: f64,
    dt_safety: Option<f64>,
    snapshot_every: Option<u64>,
    line_left: Option<f64>,
    line_right: Option<f64>,
    stop_knorm: Option<f64>,
    max_steps: Option<u64>,
    init: Option<InitialKind>,
    #[serde(rename = "A")]
    amplitude: Option<f64>,
    m: Option<u32>,
    init_file: Option<PathBuf>,
    init_frame: Option<i64>,
    sweep: Option<SweepGrid>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub flow: FlowConfig,
    pub initial: InitialSpec,
    pub sweep: Option<SweepGrid>,
}

/// Parses a TOML configuration document. Unknown keys are errors.
pub fn parse_config(text: &str) -> Result<RunConfig, IoError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| IoError::Config(e.message().to_string()))?;
    let mut flow = FlowConfig::new(raw.n, raw.t_end);
    if let Some(v) = raw.dt_safety {
        flow.dt_safety = v;
    }
    if let Some(v) = raw.snapshot_every {
        flow.snapshot_every = v;
    }
    if let Some(v) = raw.line_left {
        flow.line_left = v;
    }
    if let Some(v) = raw.line_right {
        flow.line_right = v;
    }
    if let Some(v) = raw.stop_knorm {
        flow.stop_knorm = v;
    }
    if let Some(v) = raw.max_steps {
        flow.max_steps = v;
    }
    flow.validate().map_err(|e| match e {
        crate::error::FlowError::Config(m) => IoError::Config(m),
        other => IoError::Config(other.to_string()),
    })?;
    let initial = InitialSpec {
        kind: raw.init.unwrap_or(InitialKind::CosineGraph),
        amplitude: raw.amplitude.unwrap_or(0.05),
        mode: raw.m.unwrap_or(1),
        n: flow.n,
        line_left: flow.line_left,
        line_right: flow.line_right,
        file: raw.init_file,
        frame: raw.init_frame.unwrap_or(-1),
    };
    initial.validate()?;
    if let Some(grid) = &raw.sweep {
        if grid.n.iter().any(|&n| n < crate::curve::MIN_SEGMENTS) {
            return Err(IoError::Config("sweep.n: every entry must be >= 16".into()));
        }
    }
    Ok(RunConfig {
        flow,
        initial,
        sweep: raw.sweep,
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Frame {
    pub t: f64,
    pub points: Vec<Point>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SnapshotsMeta {
    pub schema_version: u32,
    pub version: String,
    pub config: Option<FlowConfig>,
    pub initial: Option<InitialSpec>,
    pub termination: Option<Termination>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SnapshotsDoc {
    pub meta: SnapshotsMeta,
    pub frames: Vec<Frame>,
}

pub const CSV_HEADER: &str = "time,omega,length,energy,knorm2,ksnorm2,kssnorm2,k_inf,ks_inf,\
delta_margin,dissipation,bc_ks_left,bc_ks_right,bc_ksss_left,bc_ksss_right";

pub fn diagnostics_csv(trajectory: &Trajectory) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for s in &trajectory.snapshots {
        let r = &s.record;
        let row = [
            r.time,
            r.omega,
            r.length,
            r.energy,
            r.knorm2,
            r.ksnorm2,
            r.kssnorm2,
            r.k_inf,
            r.ks_inf,
            r.delta_margin,
            r.dissipation,
            r.bc_residuals.ks[0],
            r.bc_residuals.ks[1],
            r.bc_residuals.ksss[0],
            r.bc_residuals.ksss[1],
        ];
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            // Display prints the shortest string that round-trips.
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn snapshots_doc(trajectory: &Trajectory, initial: Option<&InitialSpec>) -> SnapshotsDoc {
    SnapshotsDoc {
        meta: SnapshotsMeta {
            schema_version: SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: Some(trajectory.metadata.config.clone()),
            initial: initial.cloned(),
            termination: Some(trajectory.metadata.termination.clone()),
        },
        frames: trajectory
            .snapshots
            .iter()
            .map(|s| Frame {
                t: s.time,
                points: s.curve.points().to_vec(),
            })
            .collect(),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let mut f = fs::File::create(path).map_err(|source| IoError::File {
        path: path.into(),
        source,
    })?;
    f.write_all(bytes).map_err(|source| IoError::File {
        path: path.into(),
        source,
    })
}

fn to_json<T: Serialize>(value: &T, path: &Path) -> Result<Vec<u8>, IoError> {
    let mut bytes = serde_json::to_vec(value).map_err(|source| IoError::Json {
        path: path.into(),
        source,
    })?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes `diagnostics.csv`, `snapshots.json` and `verify.json` into
/// `out_dir`, creating it if needed. Identical inputs give identical bytes.
pub fn emit(
    trajectory: &Trajectory,
    initial: Option<&InitialSpec>,
    reports: &[CheckReport],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, IoError> {
    fs::create_dir_all(out_dir).map_err(|source| IoError::File {
        path: out_dir.into(),
        source,
    })?;
    let csv = out_dir.join("diagnostics.csv");
    write_file(&csv, diagnostics_csv(trajectory).as_bytes())?;
    let snaps = out_dir.join("snapshots.json");
    write_file(&snaps, &to_json(&snapshots_doc(trajectory, initial), &snaps)?)?;
    let verify = out_dir.join("verify.json");
    write_file(&verify, &to_json(&reports, &verify)?)?;
    Ok(vec![csv, snaps, verify])
}

/// Writes `verify.json` alone (used by the standalone inequality sampler).
pub fn emit_reports(reports: &[CheckReport], out_dir: &Path) -> Result<PathBuf, IoError> {
    fs::create_dir_all(out_dir).map_err(|source| IoError::File {
        path: out_dir.into(),
        source,
    })?;
    let verify = out_dir.join("verify.json");
    write_file(&verify, &to_json(&reports, &verify)?)?;
    Ok(verify)
}
