use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(u32, u32),
    #[error("invalid dimension {0} (expected 1..=30)")]
    InvalidDimension(u32),
    #[error("element {bits:#x} does not fit in dimension {dim}")]
    ElementOutOfRange { bits: u64, dim: u32 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("enumeration budget exceeded: {0}")]
    Budget(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("arithmetic invariant broken: {0}")]
    Invariant(String),
    #[error("replay mismatch: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
