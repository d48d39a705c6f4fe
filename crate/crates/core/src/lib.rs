//! A verification laboratory for point counting on projective complete
//! intersections over finite fields.
//!
//! The crate is organised as a pipeline:
//!
//! - [`gf`]: prime fields and their extensions, with deterministic seeded
//!   modulus search and a stable element enumeration.
//! - [`poly`]: sparse homogeneous forms, complete-intersection specs, spec
//!   parsing/serialisation, Jacobian ranks, and random smooth-spec generation.
//! - [`counter`]: exhaustive projective point counts over extension fields,
//!   with chart-based enumeration, optional parallel workers, an append-only
//!   count cache, and a smoothness probe that piggybacks on enumeration.
//! - [`zeta`]: reconstruction of the middle characteristic polynomial of
//!   Frobenius from point counts (Newton's identities, functional-equation
//!   completion), count prediction, and Riemann-hypothesis checks.
//! - [`theorems`]: point-count inequalities, Betti-number bounds, genus
//!   bookkeeping, and other mechanically checkable identities, each emitted as
//!   a self-auditing [`theorems::VerificationReport`].
//! - [`dynamics`]: Lefschetz-number bookkeeping for endomorphisms and
//!   fixed-point periodicity of diagonal coordinate permutations.
//!
//! All counts and bounds are exact integers (`num_bigint`); square roots of
//! field cardinalities are never materialised — inequalities involving
//! `q^{1/2}` are compared by squaring both sides.

pub mod counter;
pub mod dynamics;
pub mod gf;
pub mod poly;
mod roots;
pub mod theorems;
pub mod zeta;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error category used by callers to decide process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Malformed or unsupported input (spec files, parameters).
    Parse,
    /// An enumeration or construction would exceed its configured budget.
    Budget,
    /// Stored data (count cache) disagrees with recomputation or is corrupt.
    Integrity,
    /// Everything else (I/O, failed searches, internal inconsistencies).
    Other,
}

/// Unified error type for the whole pipeline.
#[derive(Debug, Error)]
pub enum Error {
    // --- field construction and arithmetic ---
    #[error("{p} is not prime")]
    NonPrime { p: u64 },
    #[error("field cardinality {p}^{m} exceeds the limit {limit}")]
    FieldTooLarge { p: u64, m: usize, limit: u64 },
    #[error("no irreducible modulus of degree {m} over F_{p} found within the attempt cap")]
    IrreducibleSearchFailed { p: u64, m: usize },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("operands do not belong to the same field")]
    MixedFieldOperands,
    #[error("element index {index} out of range for a field of order {order}")]
    ElementIndexOutOfRange { index: u64, order: u64 },

    // --- spec construction and parsing ---
    #[error("unsupported field parameters: p={p}, e={e} (p must be prime and e = 1)")]
    UnsupportedFieldParameters { p: u64, e: u32 },
    #[error("polynomial {poly_index}: term has total degree {found}, expected {expected}")]
    NonHomogeneousTerm { poly_index: usize, expected: u32, found: u32 },
    #[error("polynomial {poly_index}: two terms share an exponent vector")]
    DuplicateExponentVector { poly_index: usize },
    #[error("polynomial {poly_index}: term has {found} exponents, expected {expected}")]
    WrongTermArity { poly_index: usize, expected: usize, found: usize },
    #[error("polynomial {poly_index} is zero after reduction mod p")]
    ZeroPolynomial { poly_index: usize },
    #[error("codimension {r} is not admissible in P^{ambient} (need 1 <= r <= {ambient} - 1)")]
    BadCodimension { r: usize, ambient: usize },
    #[error("spec is not valid JSON: {0}")]
    SpecJson(#[from] serde_json::Error),
    #[error("point does not lie on the variety")]
    PointNotOnVariety,
    #[error("dimension mismatch: {what}")]
    DimensionMismatch { what: String },
    #[error("no smooth candidate found in {attempts} attempts")]
    GenerationFailed { attempts: u32 },

    // --- counting ---
    #[error("enumeration needs {required} representatives, budget is {budget}")]
    EnumerationBudget { required: u128, budget: u64 },
    #[error("hyperplane index {index} out of range for P^{ambient}")]
    HyperplaneOutOfRange { index: usize, ambient: usize },
    #[error("polynomial {poly_index} vanishes identically on the hyperplane x_{hyperplane} = 0")]
    DegenerateSection { poly_index: usize, hyperplane: usize },
    #[error("cache holds count {stored} for ({fingerprint}, {m}) but {computed} was supplied")]
    CacheIntegrity { fingerprint: String, m: u32, stored: String, computed: String },
    #[error("malformed cache line {line_no}: {line:?}")]
    CacheFormat { line_no: usize, line: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),

    // --- zeta reconstruction ---
    #[error("power-sum data yields a non-integer coefficient at index {index}")]
    NonIntegerCoefficient { index: usize },
    #[error("insufficient power sums: need {needed}, got {got}")]
    InsufficientPowerSums { needed: usize, got: usize },
    #[error("no functional-equation sign is consistent with the data: {detail}")]
    NoConsistentSign { detail: String },
    #[error("both functional-equation signs fit the data; supply a further count to disambiguate")]
    AmbiguousSign,
    #[error("middle Betti number would be negative (chi = {chi})")]
    NegativeBetti { chi: i64 },
    #[error("characteristic polynomial must have constant term 1")]
    ConstantTermNotOne,

    // --- theorem bookkeeping ---
    #[error("degree vector {degrees:?} yields non-integral genus")]
    GenusNotIntegral { degrees: Vec<u32> },
    #[error("degree vector {degrees:?} yields negative genus {genus}")]
    NegativeGenus { degrees: Vec<u32>, genus: i64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Category used to map errors onto process exit codes.
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            NonPrime { .. }
            | UnsupportedFieldParameters { .. }
            | NonHomogeneousTerm { .. }
            | DuplicateExponentVector { .. }
            | WrongTermArity { .. }
            | ZeroPolynomial { .. }
            | BadCodimension { .. }
            | SpecJson(_)
            | HyperplaneOutOfRange { .. }
            | InvalidParameter(_) => ErrorCategory::Parse,
            FieldTooLarge { .. } | EnumerationBudget { .. } => ErrorCategory::Budget,
            CacheIntegrity { .. } | CacheFormat { .. } => ErrorCategory::Integrity,
            _ => ErrorCategory::Other,
        }
    }
}
