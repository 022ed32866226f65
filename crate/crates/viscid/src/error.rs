//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ViscidError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("root finder failed to converge: {0}")]
    NonConvergence(String),

    #[error("singular point: evaluation at the preshock origin")]
    SingularPoint,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("numerical instability: {0}")]
    Unstable(String),

    #[error("coverage violation: {0}")]
    Coverage(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ViscidError>;
