//! Exact arithmetic for eigenspaces of weakly holomorphic modular forms cut
//! out by sign conditions at the primes of the level.
//!
//! The crate computes, over the rationals and without floating point in any
//! load-bearing path:
//!
//! - canonical reduced bases of the spaces `A^eps(N, k)` of weakly
//!   holomorphic forms whose coefficients are supported on the residues
//!   selected by a sign vector `eps`, for levels N of shape odd squarefree
//!   times 1, 4 or 8, and weights k != 1 of matching parity,
//! - the finite-dimensional obstruction to prescribing principal parts, and
//!   lifts of admissible principal parts,
//! - the bilinear duality between coefficients of the weight `k` and weight
//!   `2 - k` families,
//! - discriminant forms attached to `(N, eps)`, the induced vector-valued
//!   lift of scalar forms, and a numeric check of the Weil transformation
//!   law at a sample point,
//! - integrality certificates for the basis coefficients via eta-quotient
//!   clearing and Sturm bounds.
//!
//! Modules build bottom up: [`arith`] (scalars and characters), [`qseries`]
//! (windowed q-expansions), [`linalg`] (exact row reduction), [`discform`]
//! (finite quadratic modules), [`genforms`] (eta quotients, Eisenstein
//! series, spanning sets), [`spaces`] (the basis pipeline), [`duality`],
//! [`vvmf`], [`integrality`], and [`docio`] (documents and the on-disk
//! cache).

pub mod arith;
pub mod discform;
pub mod docio;
pub mod duality;
pub mod genforms;
pub mod integrality;
pub mod linalg;
pub mod mp;
pub mod qseries;
pub mod spaces;
pub mod vvmf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum EpsError {
    /// Malformed user input (rationals, ranges, sign vectors, documents).
    #[error("invalid input: {0}")]
    Input(String),

    /// Level outside the supported family.
    #[error("unsupported level {0}: {1}")]
    Level(u64, String),

    /// Weight rejected for this family (weight 1, or parity mismatch).
    #[error("unsupported weight {weight} at level {level}: {reason}")]
    Weight { level: u64, weight: i64, reason: String },

    /// A q-series operation was asked to look outside its window of
    /// guaranteed coefficients.
    #[error("series window too short: {0}")]
    Window(String),

    /// Division by a series with no invertible leading coefficient.
    #[error("cannot invert series: {0}")]
    NonUnit(String),

    /// The generator pool failed to span a space it should span; computed
    /// pivots disagree with the predicted existence pattern.
    #[error("generator pool does not span: level {level}, weight {weight}, missing orders {missing:?}, unexpected orders {extra:?}")]
    SpanningIncomplete {
        level: u64,
        weight: i64,
        missing: Vec<i64>,
        extra: Vec<i64>,
    },

    /// A prescribed principal part fails the obstruction test.
    #[error("principal part is obstructed by {witnesses} dual cusp form(s)")]
    Obstructed { witnesses: usize },

    /// Internal consistency failure; indicates a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub use arith::{kronecker, l_value, QuadChar, Rat};
pub use discform::SignVector;
pub use qseries::QSeries;
pub use spaces::{EpsSpace, Existence, ReducedBasis, SpaceSpec};
