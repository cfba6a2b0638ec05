use thiserror::Error;

/// Errors produced by the planning, synchronization and simulation pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A caller-supplied argument is outside the operation's domain.
    #[error("argument error: {0}")]
    Argument(String),
    /// Input data violates a structural invariant.
    #[error("validation error: {0}")]
    Validation(String),
    /// A numerical routine failed (singular system, solver breakdown).
    #[error("numerical error: {0}")]
    Numerical(String),
    /// The constrained problem has no solution under the given bounds.
    #[error("infeasible: {reason}")]
    Infeasible { reason: String },
    /// Frequency-response estimation could not extract a component.
    #[error("estimation error: {0}")]
    Estimation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn numerical(msg: impl Into<String>) -> Error {
    Error::Numerical(msg.into())
}
