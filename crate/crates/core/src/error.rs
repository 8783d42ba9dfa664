use thiserror::Error;

/// Errors raised by the solvers and constructors in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Array dimensions do not agree.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A weight vector flagged as a probability does not sum to one.
    #[error("weights sum to {sum}, expected 1 within {tol:e}")]
    NotProbability { sum: f64, tol: f64 },

    /// Marginal masses differ, so no coupling exists.
    #[error("infeasible marginals: total masses {left} and {right} differ")]
    Infeasible { left: f64, right: f64 },

    /// A matrix that must be positive semidefinite has a negative eigenvalue.
    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),

    /// A matrix that must be inverted is (numerically) singular.
    #[error("matrix is not invertible (smallest eigenvalue {0:e})")]
    NotInvertible(f64),

    /// The requested input size or variant is not supported.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A computation would need more memory or time than allowed.
    #[error("resource limit: {0}")]
    Resource(String),

    /// The simplex method hit its iteration cap.
    #[error("solver stalled after {0} iterations")]
    SolverStall(usize),

    /// A transport plan is not the matrix of a permutation.
    #[error("plan is not an assignment: {0}")]
    NonAssignment(String),

    /// Moment matching could not reduce the moment residual.
    #[error("parameters not identified: moment residual {0:e} cannot be reduced")]
    NonIdentification(f64),

    /// Proximal gradient iterations diverged.
    #[error("step size too large: objective increased at iteration {0}")]
    StepSize(usize),

    /// An exponent exceeded the overflow guard.
    #[error("overflow: exponent {0} exceeds cap")]
    Overflow(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
