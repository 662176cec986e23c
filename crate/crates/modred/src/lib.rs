//! Module-lattice reduction toolkit over 2-power cyclotomic rings.
//!
//! The crate is organized around one reduction pipeline: exact arithmetic in
//! `R = Z[x]/(x^n + 1)` and its fraction field ([`cyclotomic`]), totally split
//! primes with NTT and scaled rounding ([`splitntt`]), K-linear Gram-Schmidt
//! over `K^d` ([`modgs`]), the log-unit geometry and short-generator decode
//! ([`logunits`]), balanced sign-selection solvers ([`signopt`]), the
//! per-line reduction pipeline ([`pipeline`]), and experiment drivers
//! ([`harness`]). Wire formats for the CLI live in [`io`].

pub mod cyclotomic;
pub mod harness;
pub mod io;
pub mod logunits;
pub mod modgs;
pub mod pipeline;
pub mod signopt;
pub mod splitntt;

mod simplex;

pub use cyclotomic::{EmbeddingVector, RingElement, RingParams};



pub use splitntt::{CrtBasis, SplitPrimeContext};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("ring parameter mismatch: {0}")]
    ParamMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("rank-deficient basis: Gram value vanished at line {0}")]
    RankDeficient(usize),
    #[error("zero element where a nonzero element is required")]
    ZeroElement,
    #[error("element is not a unit of R (norm {0})")]
    NotAUnit(String),
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("linear program infeasible")]
    LpInfeasible,
}

pub type Result<T> = std::result::Result<T, Error>;
