//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument failed. The message names the violated
    /// condition so CLI callers can surface it verbatim.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Marking produced an empty admissible set; the operator would be singular.
    #[error("admissible set is empty: {0}")]
    EmptyAdmissibleSet(String),

    /// Iterative solver stopped at the iteration cap.
    #[error("solver did not converge: relative residual {residual:.3e} after {iterations} iterations (tol {tol:.3e})")]
    SolverFailure {
        residual: f64,
        iterations: usize,
        tol: f64,
    },

    /// A field was built on a different grid than the one it is used with.
    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    /// Evaluation requested at a point where the formula is singular.
    #[error("singular point: {0}")]
    SingularPoint(String),

    /// A quadrature or norm overflowed to a non-finite value.
    #[error("non-finite result: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
