use thiserror::Error;

/// Errors raised by the toolkit. Mathematical negative outcomes (a falsified
/// inequality, an unbounded orbit) are verdicts, not errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An iterate left the finite reals.
    #[error("orbit diverged: non-finite value at step {index}")]
    Divergence { index: usize },

    #[error("non-finite value produced by {0}")]
    NonFinite(String),

    #[error("decay horizon not reached within {cap} iterations (last value {last_value:e})")]
    HorizonNotReached { cap: usize, last_value: f64 },

    #[error("not converged after {iterations} iterations (bound {bound:e})")]
    NotConverged { iterations: usize, bound: f64 },

    /// A consequence that must hold for every input failed; indicates a bug.
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
