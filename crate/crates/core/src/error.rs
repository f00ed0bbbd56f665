use std::path::PathBuf;

/// Errors raised by the BMST-RUN toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown constellation `{0}`")]
    UnknownConstellation(String),

    #[error("malformed constellation file {path}: {reason}")]
    MalformedConstellation { path: PathBuf, reason: String },

    #[error("invalid constellation: {0}")]
    InvalidConstellation(String),

    #[error("invalid code parameters: {0}")]
    InvalidCode(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("alphabet mismatch: expected q = {expected}, got q = {actual}")]
    AlphabetMismatch { expected: usize, actual: usize },

    #[error("invalid message: {0}")]
    InvalidMessage(String),

    #[error("noise scale must be positive, got {0}")]
    NonPositiveSigma(f64),

    #[error("memory search exceeded cap of {cap} without reaching p_target = {p_target:e}")]
    MemoryCapExceeded { cap: usize, p_target: f64 },

    #[error("capacity target {target} bits is outside the bracket [{lo_db}, {hi_db}] dB")]
    BracketFailure { target: f64, lo_db: f64, hi_db: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
