use thiserror::Error;

/// Errors raised by solver and oracle routines.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("power iteration did not converge in {max_iter} iterations (last estimate {last_estimate})")]
    PowerIterationNonConvergence { max_iter: usize, last_estimate: f64 },

    #[error("resolvent inner solve did not converge in {max_inner} iterations (residual {residual})")]
    ResolventNonConvergence { max_inner: usize, residual: f64 },

    #[error("grid oracle found no equilibrium point at the requested tolerance")]
    EmptyGridSolutionSet,

    #[error("dimension {dim} exceeds the oracle guard (max {max})")]
    DimensionGuard { dim: usize, max: usize },
}

pub type Result<T> = std::result::Result<T, SolverError>;
