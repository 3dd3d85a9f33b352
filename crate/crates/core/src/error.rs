use thiserror::Error;

/// Errors raised by the spectral computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SteklovError {
    /// An input violates a documented precondition.
    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: &'static str, reason: String },

    /// Evaluation too close to a pole of cot/tan.
    #[error("argument {x} is within {tol:e} of a pole")]
    NearPole { x: f64, tol: f64 },

    /// The equation has no root in its admissible range.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// A bracketed root search failed to converge.
    #[error("root search did not converge in [{lo}, {hi}] after {iterations} iterations")]
    NonConvergence { lo: f64, hi: f64, iterations: usize },

    /// A numerical domain condition failed (e.g. a quadratic without a positive root).
    #[error("numerical domain error: {0}")]
    Domain(String),

    /// Input data is inconsistent with any admissible geometry.
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
}

impl SteklovError {
    pub(crate) fn arg(field: &'static str, reason: impl Into<String>) -> Self {
        SteklovError::InvalidArgument {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, SteklovError>;
