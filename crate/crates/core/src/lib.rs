//! Bounds and optimal strategies for correlation Bell inequalities
//! `Σ g[x][y] E(x, y) ≤ B`.
//!
//! For a real coefficient matrix `g` the crate computes
//!
//! - the classical bound by exact enumeration ([`bell::classical_bound`]),
//! - the singular-value bound `√(m1·m2)·‖g‖₂` on the quantum value
//!   ([`svd::singular_value_bound`]),
//! - a certificate that the bound is attained, with optimal measurement
//!   directions and a state/observable realization ([`tightness`], [`strategies`]),
//! - see-saw maxima at fixed direction dimension, used as dimension witnesses
//!   ([`oracles`]),
//! - the rotated-frame family of CHSH inequalities ([`rotation`]).
//!
//! ```
//! use bellbound::{bell, svd, BellCoefficients};
//!
//! let g = BellCoefficients::chsh();
//! assert_eq!(bell::classical_bound(&g)?.value, 2.0);
//! let sv = svd::singular_value_bound(&g)?;
//! assert!((sv - 2.0 * 2f64.sqrt()).abs() < 1e-12);
//! # Ok::<(), bellbound::Error>(())
//! ```

pub mod bell;
pub mod error;
pub mod input;
pub mod oracles;
pub mod report;
pub mod rotation;
pub mod strategies;
pub mod svd;
pub mod tightness;

pub use bell::{BellCoefficients, CorrelationTable, DeterministicAssignment};
pub use error::{Error, GramFailure, Result};
pub use oracles::{BoundReport, SeesawConfig};
pub use strategies::VectorStrategy;
pub use tightness::{AlphaSolution, TightnessOptions};

// Code listings in the guide under book/ run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/classical.md")]
    mod classical {}
    #[doc = include_str!("../../../book/src/singular_value_bound.md")]
    mod singular_value_bound {}
    #[doc = include_str!("../../../book/src/tightness.md")]
    mod tightness {}
    #[doc = include_str!("../../../book/src/strategies.md")]
    mod strategies {}
    #[doc = include_str!("../../../book/src/dimension_witness.md")]
    mod dimension_witness {}
    #[doc = include_str!("../../../book/src/rotation.md")]
    mod rotation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/schema.md")]
    mod schema {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
