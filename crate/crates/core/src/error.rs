use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: max |M - M^dag| = {deviation:e} exceeds {tol:e}")]
    NotHermitian { deviation: f64, tol: f64 },
    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:e} below -{tol:e}")]
    NotPositive { min_eigenvalue: f64, tol: f64 },
    #[error("trace {trace} exceeds 1")]
    TraceTooLarge { trace: f64 },
    #[error("dimension {dim} exceeds the configured maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid subsystem selection: {0}")]
    InvalidSubsystems(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("operator is zero")]
    ZeroOperator,
    #[error("SDP solver failed: {0}")]
    Solver(String),
    #[error("unknown check id `{0}`")]
    UnknownCheck(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
