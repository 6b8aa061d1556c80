use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precision error: {0}")]
    Precision(String),

    #[error("{0} is not invertible")]
    NotInvertible(String),

    #[error("normalization error: {0}")]
    Normalization(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("not supported: {0}")]
    NotSupported(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("path of depth {depth} needs to be extended beyond the cap")]
    NeedsDeeperPath { depth: usize },

    #[error(
        "construction failed at level {level}: first mismatch at n = {index} (automaton {found}, oracle {expected})"
    )]
    Construction { level: u32, index: u64, expected: String, found: String },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
