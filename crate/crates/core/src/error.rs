use thiserror::Error;

/// Errors produced by the extractor toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: u64, len: u64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("field elements belong to different fields ({left} vs {right})")]
    FieldMismatch { left: String, right: String },

    #[error("unsupported field degree {0}, expected 1..=16")]
    UnsupportedDegree(u32),

    #[error("modulus {0:#b} is not an irreducible polynomial of the requested degree")]
    ReducibleModulus(u32),

    #[error("zero has no multiplicative inverse")]
    ZeroInverse,

    #[error("duplicate interpolation node {0:#x}")]
    DuplicateNode(u32),

    #[error("interpolation needs at least one point")]
    NoPoints,

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("{what} too large: {size} exceeds limit {limit}")]
    TooLarge { what: &'static str, size: u128, limit: u128 },

    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
