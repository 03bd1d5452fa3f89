use thiserror::Error;

/// Errors raised by the evaluators, solvers and simulators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("unsupported distribution: {0}")]
    Unsupported(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("constraint error: {0}")]
    Constraint(String),

    #[error("degenerate instance: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
