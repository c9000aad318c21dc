//! Error type shared by every stage of the pipeline.
//!
//! Budget overruns are ordinary, reportable outcomes (a sweep must keep
//! going when one row blows a cap), so they are errors here rather than
//! panics, and they carry enough context to be surfaced in a row status.

use thiserror::Error;

/// Errors produced by the construction, density, integer-point and
/// congruence stages.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    /// Pair enumeration is only defined for even degree.
    #[error("unsupported degree {0}: degree must be even and >= 4")]
    UnsupportedDegree(usize),

    /// The invariant-form system did not have a 1-dimensional solution
    /// space; the input pair is not admissible.
    #[error("invariant form space has dimension {0}, expected 1")]
    FormNotUnique(usize),

    /// The invariant form is singular.
    #[error("invariant form is degenerate")]
    FormDegenerate,

    /// A generator had no integral power within the search bound.
    #[error("no integral power of a generator within bound {0}")]
    KbarUnbounded(u64),

    /// Every base-change candidate was discarded.
    #[error("no base-change candidate with bounded integrality defect")]
    NoIntegralCandidate,

    /// A matrix expected to be a transvection is not one.
    #[error("matrix is not a transvection: rank(h - 1) != 1")]
    NotATransvection,

    /// An operation requiring Zariski density was run on a non-dense
    /// group.
    #[error("group is not Zariski dense")]
    NotDense,

    /// Reduction mod p hit a denominator divisible by p.
    #[error("denominator not invertible mod {0}")]
    DenominatorNotInvertible(u64),

    /// A matrix expected to be invertible mod m is singular there.
    #[error("matrix not invertible mod {0}")]
    NotInvertibleMod(u64),

    /// Denominator growth did not stabilize: the group has no finite
    /// integrality scale, so its integer points have infinite index.
    #[error("denominators do not stabilize: group is not commensurable with an integral one")]
    NotIntegral,

    /// Coset orbit exceeded the transversal cap.
    #[error("coset transversal exceeded budget of {0} cosets")]
    TransversalBudgetExceeded(usize),

    /// A stabilizer chain would need more vector slots than allowed.
    #[error("orbit storage for modulus {modulus} needs {needed} vector slots, budget is {budget}")]
    MemoryBudgetExceeded {
        /// Modulus of the offending chain.
        modulus: u64,
        /// Projected slot requirement (m^n).
        needed: u128,
        /// Configured cap.
        budget: u128,
    },

    /// Level exponent search passed the configured cap without confirming
    /// a full kernel layer.
    #[error("level exponent search for p={p} exceeded cap e={cap}")]
    LevelSearchExceeded {
        /// Prime whose exponent search failed.
        p: u64,
        /// Exponent cap that was reached.
        cap: u32,
    },

    /// Schreier-generator verification failed mod the level.
    #[error("thinned generating set failed congruence verification mod {0}")]
    VerificationFailed(u64),

    /// Input matrix does not preserve the standard form.
    #[error("matrix is not symplectic")]
    NotSymplectic,

    /// Input matrix has a non-integer entry where integers are required.
    #[error("matrix is not integral")]
    NotIntegral2,

    /// A cofactor resisted factoring within the budget.
    #[error("incomplete factorization: composite cofactor {0} survived the budget")]
    FactorizationIncomplete(String),

    /// A pair label could not be parsed.
    #[error("cannot parse pair label: {0}")]
    BadPairLabel(String),

    /// Filesystem failure while reading or writing reports or caches.
    #[error("io error: {0}")]
    Io(String),

    /// A serialized report is structurally invalid.
    #[error("malformed report: {0}")]
    MalformedReport(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
