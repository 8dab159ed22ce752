use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A dimension wall was hit. `limit` names the cap and `hint` the
    /// largest feasible parameter choice.
    #[error("capacity exceeded: {what} = {requested} exceeds limit {limit}; {hint}")]
    Capacity {
        what: String,
        requested: u128,
        limit: u128,
        hint: String,
    },

    #[error(
        "eigensolver did not converge after {iterations} iterations \
         (best estimate {best}, residual {residual:e})"
    )]
    Convergence {
        best: f64,
        residual: f64,
        iterations: usize,
    },

    #[error(
        "Gram matrix is degenerate (condition number {condition:e}); \
         use pseudoinverse mode for 2^n < k"
    )]
    DegenerateGram { condition: f64 },

    #[error("dense eigendecomposition failed: {0}")]
    Decomposition(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
