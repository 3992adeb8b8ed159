use std::path::PathBuf;

use thiserror::Error;

/// Failures raised while building or measuring a discrete curve.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("curve needs at least {min} segments, got {got}")]
    TooFewNodes { min: usize, got: usize },
    #[error("boundary lines must satisfy line_left < line_right (got {left} and {right})")]
    BadLines { left: f64, right: f64 },
    #[error("endpoint {end} is not pinned: x = {x}, line at {line}")]
    NotPinned { end: &'static str, x: f64, line: f64 },
    #[error("degenerate curve: nodes {index} and {next} coincide", next = .index + 1)]
    Degenerate { index: usize },
    #[error("non-finite coordinate at node {index}")]
    NonFinite { index: usize },
    #[error("arc spacing deviates by {deviation:.3e} (relative) from uniform; resample first")]
    NonUniform { deviation: f64 },
    #[error("tangent angle jumps by {jump:.3} rad at node {index}; curve is under-resolved")]
    UnderResolved { index: usize, jump: f64 },
    #[error("ghost count {ghosts} exceeds half the segment count {segments}")]
    TooManyGhosts { ghosts: usize, segments: usize },
    #[error("field has {got} values but the profile has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("singular banded system: zero pivot in row {row}")]
    SingularPivot { row: usize },
}

/// Failures of a single time step.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    /// The stepped curve lost regularity; retry with a smaller step.
    #[error("step {step} rejected: {source}")]
    Rejected { step: u64, source: CurveError },
    #[error("step {step} failed: {source}")]
    Fatal { step: u64, source: CurveError },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("invalid flow configuration: {0}")]
    Config(String),
    #[error("initial winding number {omega} is not within 0.1 of zero")]
    Winding { omega: f64 },
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Errors from diagnostics and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("value at index {index} is not positive ({value})")]
    NonPositive { index: usize, value: f64 },
    #[error("window {start}..{end} is outside a series of length {len}")]
    BadWindow { start: usize, end: usize, len: usize },
    #[error("snapshot {index} has {got} nodes, expected {expected}")]
    NodeCountMismatch { index: usize, expected: usize, got: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Curve(#[from] CurveError),
}
