use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid datum: {0}")]
    Datum(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("window width {width} is below 4 samples ({min} required)")]
    WindowAliasing { width: f64, min: f64 },
    #[error("invalid anisotropy index: {0}")]
    Anisotropy(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("flow aborted at t = {t}: {reason}")]
    FlowAbort { t: f64, reason: String },
    #[error("factorization failed (condition estimate {condition:e})")]
    Factorization { condition: f64 },
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
