use thiserror::Error;

/// Errors produced by the spectral computations and checks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("curvature case hypothesis violated: {0}")]
    CaseViolation(String),

    #[error("radius {radius} outside the admissible range (< {limit})")]
    RadiusOutOfRange { radius: f64, limit: f64 },

    #[error("tube width {h} must lie in (0, {limit})")]
    TubeWidthOutOfRange { h: f64, limit: f64 },

    #[error("radial ODE step size underflow at r = {r} (degree {degree})")]
    StepUnderflow { r: f64, degree: usize },

    #[error("radial ODE produced a non-finite value at r = {r} (degree {degree})")]
    NonFinite { r: f64, degree: usize },

    #[error("launch point sensitivity {relative_change:e} exceeds {limit:e} at degree {degree}")]
    LaunchSensitivity {
        degree: usize,
        relative_change: f64,
        limit: f64,
    },

    #[error("spectrum not strictly increasing in degree at k = {degree}")]
    NonMonotoneSpectrum { degree: usize },

    #[error("non-positive pivot {value:e} at index {index}")]
    NonPositivePivot { index: usize, value: f64 },

    #[error("eigen iteration did not converge for index {index} after {sweeps} sweeps")]
    NoConvergence { index: usize, sweeps: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("metric invalid at ({x}, {y}): {reason}")]
    MetricInvalid { x: f64, y: f64, reason: String },

    #[error("spectrum table invariant violated: {0}")]
    BadSpectrum(String),
}

pub type Result<T> = std::result::Result<T, Error>;
