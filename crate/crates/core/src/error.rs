use thiserror::Error;

/// Errors produced anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-positive count {value} in series `{series}` at row {row}")]
    NonPositiveCount { series: String, row: usize, value: f64 },

    #[error("too short: need at least {required} samples, found {found}")]
    TooShort { required: usize, found: usize },

    #[error("series `{series}` has zero variance and cannot be normalized")]
    ZeroVariance { series: String },

    #[error("lag {lag} exceeds the maximum admissible lag {max}")]
    LagTooLarge { lag: usize, max: usize },

    #[error("matrix is not exactly symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("symmetric eigensolver failed to converge for lag {lag} (n = {n})")]
    ConvergenceFailure { lag: usize, n: usize },

    #[error("vector is not unit-norm (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("degenerate aspect ratio: effective length {effective_length} must exceed n = {n}")]
    DegenerateAspect { n: usize, effective_length: usize },

    #[error("spectral position {position} out of range for n = {n}")]
    IndexOutOfRange { position: usize, n: usize },

    #[error("spectra have different lengths ({before} vs {after})")]
    LengthMismatch { before: usize, after: usize },

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("unknown series `{0}`")]
    UnknownSeries(String),

    #[error("injection window [{start}, {end}) out of range for {len} samples")]
    WindowOutOfRange { start: usize, end: usize, len: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
