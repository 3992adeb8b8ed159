//! Simulation and verification of the sixth-order gradient flow of
//! `½∫k_s² ds` for open plane curves whose ends slide on two vertical lines.

pub mod banded;
pub mod curve;
pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod io;
pub mod spline;
pub mod verify;

pub use curve::{
    compute_geometry, integrate, mirror_extend, resample_uniform, DiscreteCurve, GeometryProfile,
    Point,
};
pub use error::{AnalysisError, CurveError, FlowError, IoError, StepError};
