//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by basis construction, operator assembly and experiments.
#[derive(Debug, Error)]
pub enum Error {
    /// Requested basis dimension exceeds the configured hard cap.
    #[error("basis dimension {dim} exceeds the cap of {cap} states ({context})")]
    DimensionCap {
        dim: u128,
        cap: usize,
        context: String,
    },

    /// Two objects that must live on the same basis do not.
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    /// An occupation list does not belong to the basis sector.
    #[error("state not in basis sector: {0}")]
    StateNotInSector(String),

    /// A ladder-operator product would leave a number-resolved sector.
    /// Number-resolved bases never truncate silently.
    #[error("cross-sector ladder application: {0}")]
    CrossSector(String),

    /// A polynomial cannot be applied inside the given sector.
    #[error("polynomial does not fit the basis sector: {0}")]
    DegreeOverflow(String),

    /// Malformed chain parameters.
    #[error("invalid chain: {0}")]
    InvalidChain(String),

    /// Malformed monomial function.
    #[error("invalid function: {0}")]
    InvalidFunction(String),

    /// Monomial-grammar parse failure, with a byte offset into the input.
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    /// Invalid angular-momentum labels (doubled so half-integers are exact).
    #[error("invalid angular momentum labels two_l={two_l}, two_mp={two_mp}, two_m={two_m}")]
    InvalidAngularMomentum { two_l: i64, two_mp: i64, two_m: i64 },

    /// The dense eigensolver failed to converge or produced an invalid
    /// decomposition.
    #[error("eigendecomposition failed: {0}")]
    Eigensolver(String),

    /// The Krylov stepper could not reach the requested accuracy.
    #[error("krylov evolution failed: {0}")]
    Krylov(String),

    /// Invalid dressing parameters or unsupported dressing for an operation.
    #[error("dressing: {0}")]
    Dressing(String),

    /// Invalid interference lattice.
    #[error("interference: {0}")]
    Interference(String),
}

pub type Result<T> = std::result::Result<T, Error>;
