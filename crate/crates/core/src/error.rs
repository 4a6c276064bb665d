use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max |M - M^dag| = {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not a projector (max |P^2 - P| = {0:e})")]
    NotProjector(f64),

    #[error("function undefined at eigenvalue {0}")]
    FunctionUndefined(f64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("incompatible input: {0}")]
    Incompatible(String),

    #[error("table entry (x1={}, x2={}, x3={}) invalid: {reason}", x[0], x[1], x[2])]
    InvalidTableEntry { x: [usize; 3], reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
