use thiserror::Error;

use crate::solver::SolveTrace;

/// Errors raised by the library. Each variant maps to one failure class of
/// the command-line contract (configuration, numerical, integrity).
#[derive(Debug, Error)]
pub enum SpmeError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("resolution error: epsilon {epsilon} must be at least {required} (2 * dt_path)")]
    Resolution { epsilon: f64, required: f64 },

    #[error("stability error: dt {dt} exceeds stable bound {bound}")]
    Stability { dt: f64, bound: f64 },

    #[error("step budget of {max_steps} exhausted at t = {reached}")]
    Budget {
        max_steps: usize,
        reached: f64,
        partial: Box<SolveTrace>,
    },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("range error: {what}; required margin {required}, available {available}")]
    Range {
        what: String,
        required: f64,
        available: f64,
    },

    #[error("domination search failed: {0}")]
    SearchFailure(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{failed} of {total} paths failed")]
    TooManyFailures { failed: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl SpmeError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        SpmeError::Config(msg.into())
    }

    /// True when the error stems from invalid input rather than a numerical failure.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            SpmeError::Config(_)
                | SpmeError::Resolution { .. }
                | SpmeError::Precondition(_)
                | SpmeError::Shape(_)
                | SpmeError::Range { .. }
                | SpmeError::SearchFailure(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, SpmeError>;
