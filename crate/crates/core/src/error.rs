//! Crate-wide error type.

/// Errors produced by construction, validation, and solving.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// An argument fell outside its documented domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A composite value failed a structural invariant.
    #[error("invalid value: {0}")]
    Invalid(String),
    /// The LP solver could not certify feasibility. Always indicates a bug
    /// upstream: the feasibility program has optimum at most zero.
    #[error("solver failure: {0}")]
    Solver(String),
    /// A predictor was driven out of the predict/observe round order.
    #[error("protocol error: {0}")]
    Protocol(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
