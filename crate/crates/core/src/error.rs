use thiserror::Error;

/// Errors produced while loading profiles, building instances or planning a split.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("index {index} out of range [{min}, {max}]")]
    IndexOutOfRange { index: usize, min: usize, max: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid GA configuration: {0}")]
    InvalidConfig(String),

    #[error("no feasible solution")]
    NoFeasibleSolution,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
