use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite coordinate at index {index}")]
    NonFinite { index: usize },

    #[error("zero vector is not allowed here")]
    ZeroVector,

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("vertex set is not origin-symmetric: missing mirror vertex {missing:?} of {vertex:?}")]
    AsymmetricVertices { vertex: Vec<f64>, missing: Vec<f64> },

    #[error("degenerate denominator: skew distance {value:e} is below threshold {threshold:e}")]
    DegenerateDenominator { value: f64, threshold: f64 },

    #[error("vector is not on the unit sphere (norm {norm})")]
    OffSphere { norm: f64 },

    #[error("exponent p = {p} is outside [0, 1]; enable the extended range to use it")]
    ExponentOutOfRange { p: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}
