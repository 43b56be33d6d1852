use thiserror::Error;

/// Errors raised by the geometry, spectral and bounds routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid grid density: {0}")]
    InvalidGrid(String),

    #[error("degenerate weight: {0}")]
    DegenerateWeight(String),

    #[error("bisection did not bracket the eigenvalue within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("eigenfunction has {0} sign changes, expected exactly one")]
    SignChanges(usize),

    #[error("Muckenhoupt integral diverges: {0}")]
    Divergent(String),

    #[error("consistency check failed: {0}")]
    Inconsistent(String),
}

impl Error {
    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_) | Error::Domain(_) | Error::InvalidGrid(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
