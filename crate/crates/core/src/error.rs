use thiserror::Error;

/// Errors raised by the simulator and the verification toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("inconsistent characteristic roots: {0}")]
    InconsistentRoots(String),

    #[error("inadmissible exponents: {0}")]
    Inadmissible(String),

    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    #[error("trajectory too short: need t >= {needed}, have {have}")]
    TrajectoryTooShort { needed: f64, have: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("fit refused: {0}")]
    Fit(String),

    #[error("serialization error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
