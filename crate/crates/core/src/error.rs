use thiserror::Error;

use crate::game::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid game: {0}")]
    Validation(#[from] Violation),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("negative duration {0}")]
    NegativeDuration(f64),

    #[error("vector is not a probability distribution (deviation {deviation:e})")]
    NotInSimplex { deviation: f64 },

    #[error("linear system too ill-conditioned (estimate {0:e})")]
    IllConditioned(f64),

    #[error("{what} did not converge within {iterations} iterations (last step {last_step:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        last_step: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("mismatched reports: {0}")]
    ReportMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures that come from bad input data rather than the solvers.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_) | Error::Parse { .. } | Error::NonFinite { .. }
        )
    }

    pub fn is_non_convergence(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }
}
