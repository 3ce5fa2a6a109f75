use thiserror::Error;

/// Errors raised anywhere in the scattering pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed scenario JSON: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("unknown material '{name}' (valid: steel, aluminum, titanium)")]
    UnknownMaterial { name: String },

    #[error("x2 = {x2} lies outside the plate thickness [{lower}, {upper}]")]
    Domain { x2: f64, lower: f64, upper: f64 },

    #[error("root count did not settle under scan refinement at omega = {omega} rad/s")]
    RootCount { omega: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("cannot snap crack tips onto the element grid: {0}")]
    Snapping(String),

    #[error("singular Jacobian in element {element}")]
    SingularJacobian { element: usize },

    #[error("degenerate mode {index}: projection diagonal too small")]
    DegenerateMode { index: usize },

    #[error("projection matrix not diagonal: off-diagonal ratio {ratio:.3e}")]
    NonOrthogonal { ratio: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("singular system at omega = {omega} rad/s")]
    Singular { omega: f64 },

    #[error("incident mode {requested} not available: only {available} propagating modes")]
    ModeUnavailable { requested: usize, available: usize },

    #[error("virtual boundary too close to the debond: clearance {clearance:.4e} m < 2 wavelengths ({required:.4e} m)")]
    Clearance { clearance: f64, required: f64 },

    #[error("incident amplitude must be nonzero")]
    ZeroAmplitude,

    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
