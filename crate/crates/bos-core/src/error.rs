use thiserror::Error;

/// Errors from operator assembly, quadrature and solvers.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Parameters outside the admissible region a >= 0, b > 0, 2a + b < 2.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Malformed grid, coefficient vector or matrix input.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Size mismatch between operands.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Uniform grid too coarse for the requested truncation.
    #[error("grid too coarse: {points} points cannot resolve half-width {n}")]
    GridTooCoarse { points: usize, n: usize },

    /// Graded quadrature failed its two-level self-consistency check.
    #[error("quadrature did not converge: levels disagree by {defect:.3e} (tol {tol:.3e})")]
    QuadratureNonConvergence { defect: f64, tol: f64 },

    /// Linear solve hit a (near-)singular pivot.
    #[error("singular linear system: {0}")]
    SingularSystem(String),

    /// Resolvent requested too close to a truncated eigenvalue.
    #[error("lambda {lambda} is within {distance:.3e} of the truncated eigenvalue {nearest} (threshold {threshold:.3e})")]
    LambdaNearEigenvalue {
        lambda: String,
        nearest: String,
        distance: f64,
        threshold: f64,
    },

    /// LAPACK-backed eigendecomposition failed.
    #[error("eigensolver failure: {0}")]
    EigenFailure(String),

    /// Time integration overflowed; the trace is truncated at the last finite time.
    #[error("evolution overflowed at t = {t}")]
    EvolutionOverflow { t: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
