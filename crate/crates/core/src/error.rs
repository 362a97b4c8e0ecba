use thiserror::Error;

use crate::boxes::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus must be at least 2, got {0}")]
    InvalidModulus(u64),

    #[error("{what} = {value} is outside the alphabet {{0..{bound}}}")]
    OutOfRange {
        what: String,
        value: usize,
        bound: usize,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("box is signalling: {0}")]
    Signalling(Box<Violation>),

    #[error("box violates its invariants: {0}")]
    InvalidBox(Box<Violation>),

    #[error("resource {index} does not have uniform outputs; counting marginals require uniform-output resources")]
    NotUniform { index: usize },

    #[error("CHSH is defined for binary alphabets only (got inputs {x}x{y}, outputs {a}x{b})")]
    NotBinary { x: usize, y: usize, a: usize, b: usize },

    #[error("{what} requires {needed} steps, above the cap of {cap}; raise it with --cap or BOXKIT_CAP")]
    CapExceeded { what: String, needed: String, cap: u128 },

    #[error("moduli {0} and {1} are not coprime")]
    NotCoprime(u64, u64),

    #[error("{0} is not prime; the divisibility argument needs a prime modulus")]
    NotPrime(u64),

    #[error("incompatible search parameters: {0}")]
    Incompatible(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
