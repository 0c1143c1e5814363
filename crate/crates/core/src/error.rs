use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator is not Hermitian (defect {defect:.3e} > tol {tol:.3e})")]
    NotHermitian { defect: f64, tol: f64 },

    #[error(
        "operator is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e} < -{tol:.3e})"
    )]
    NotPositive { min_eigenvalue: f64, tol: f64 },

    #[error("operator is not strictly positive (min eigenvalue {min_eigenvalue:.3e})")]
    NotStrictlyPositive { min_eigenvalue: f64 },

    #[error("trace is {trace} (expected 1 within {tol:.3e})")]
    InvalidTrace { trace: f64, tol: f64 },

    #[error("map is not completely positive (min Choi eigenvalue {min_eigenvalue:.3e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },

    #[error("map is not unital (residual {residual:.3e})")]
    NotUnital { residual: f64 },

    #[error("row {row} of the transition matrix sums to {sum}")]
    NotStochastic { row: usize, sum: f64 },

    #[error("distribution is not stationary for the transition matrix (residual {residual:.3e})")]
    NotStationary { residual: f64 },

    #[error("invariant state is not faithful (min eigenvalue {min_eigenvalue:.3e})")]
    NotFaithful { min_eigenvalue: f64 },

    #[error("brute-force dimension {dim} exceeds cap {cap}")]
    CapExceeded { dim: usize, cap: usize },

    #[error("window [{site}, {end}) exceeds chain length {n}")]
    WindowOutOfRange { site: usize, end: usize, n: usize },

    #[error("transfer map E_1 is not irreducible: {0}")]
    NotIrreducible(String),

    #[error("map has vanishing spectral radius")]
    ZeroMap,

    #[error("support orthogonality hypothesis violated: {0}")]
    OrthogonalityViolated(String),

    #[error("empty grid")]
    EmptyGrid,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
