use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("private value {0} outside (0, 1]")]
    InvalidValue(f64),
    #[error("bid {0} outside [0, 1]")]
    InvalidBid(f64),
    #[error("highest other bid {0} outside [0, 1]")]
    InvalidOtherBid(f64),
    #[error("empty trace")]
    EmptyTrace,
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("non-positive entry {value} at round {index}")]
    NonPositiveEntry { index: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("horizon {0} too small: at least 4 rounds are required for one level")]
    HorizonTooSmall(u64),
    #[error("horizon exceeded: all {0} rounds already played")]
    HorizonExceeded(u64),
    #[error("stale round scratch: {0}")]
    StaleScratch(String),
    #[error("checkpoint rejected: {0}")]
    Checkpoint(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
