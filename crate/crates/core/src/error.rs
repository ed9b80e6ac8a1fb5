use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },

    #[error("data length {len} does not match {width}x{height}")]
    DataLength {
        width: usize,
        height: usize,
        len: usize,
    },

    #[error("intensity {value} at index {index} is outside [0, 1]")]
    IntensityOutOfRange { index: usize, value: f64 },

    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("not enough distinct intensities: need {needed}, found {found}")]
    TooFewDistinctValues { needed: usize, found: usize },

    #[error("grid too large for enumeration: {pixels} pixels (limit {limit})")]
    GridTooLarge { pixels: usize, limit: usize },

    #[error("masks are not nested at level {0}")]
    NotNested(usize),

    #[error("phase count mismatch: {0} vs {1}")]
    PhaseCountMismatch(usize, usize),

    #[error("label {label} out of range for {phases} phases")]
    LabelOutOfRange { label: usize, phases: usize },

    #[error("unknown preset '{0}'")]
    UnknownPreset(String),

    #[error("image format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
