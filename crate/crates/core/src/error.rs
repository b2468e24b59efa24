//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not an odd prime >= 3")]
    NonPrime(u64),
    #[error("modulus is reducible over F_{0}: divisible by {1}")]
    ReducibleModulus(u64, String),
    #[error("field elements belong to different fields")]
    MixedFields,
    #[error("incompatible operands: {0}")]
    Incompatible(String),
    #[error("index {0} out of range (limit {1})")]
    IndexOutOfRange(usize, usize),
    #[error("operation requires an even number of variables, got {0}")]
    OddVariableCount(usize),
    #[error("element is not a unit")]
    NotAUnit,
    #[error("images do not define an algebra automorphism: {0}")]
    NotAnAutomorphism(String),
    #[error("p-th operator power failed the derivation consistency check")]
    NotADerivation,
    #[error("parameter out of range: {0}")]
    RangeError(String),
    #[error("stated linear dependency does not hold")]
    DependencyViolated,
    #[error("constructed automorphism failed post-verification: {0}")]
    ConstructionFailed(String),
    #[error("matrix or permutation shape mismatch: {0}")]
    ShapeError(String),
    #[error("element index does not match its torus parameter")]
    IndexMismatch,
    #[error("elements live in different algebras or fields")]
    KindMismatch,
    #[error("enumeration of {0} elements exceeds the cap {1} (set CARTAN_ORBITS_MAX_ENUM to raise)")]
    TooLarge(u128, u64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
