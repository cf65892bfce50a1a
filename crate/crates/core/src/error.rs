//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its invariant.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An argument lies outside the domain of the operation.
    #[error("domain violation: {0}")]
    Domain(String),

    /// The eigen-solver was handed a non-finite or otherwise unusable matrix.
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    /// A log-domain quantity left the representable range.
    #[error("numeric range exceeded (exponent magnitude {magnitude:e}): {context}")]
    NumericRange { context: String, magnitude: f64 },

    /// A root-finding target cannot be bracketed within the admissible interval.
    #[error("infeasible target: {0}")]
    InfeasibleTarget(String),

    /// Every sample of a log-domain estimate was `-inf`.
    #[error("degenerate estimate: {0}")]
    DegenerateEstimate(String),

    /// A Monte Carlo functional failed on a specific realization.
    #[error("functional failed at realization {index}: {source}")]
    Functional {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    /// Unwraps [`Error::Functional`] down to the failure that caused it.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::Functional { source, .. } => source.root_cause(),
            other => other,
        }
    }
}
