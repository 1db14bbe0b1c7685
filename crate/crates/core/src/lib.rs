//! Symbolic synthesis of first-error counterfactual reasoning trajectories.
//!
//! The crate is `no_std` (with `alloc`) and contains the pure algorithmic
//! parts of the pipeline:
//!
//! - [`logic`]: fact atoms, expressions, the seven rule templates, parsing,
//!   printing and three-valued evaluation.
//! - [`prover`]: entailment by exhaustive model enumeration, the licensed
//!   inference-pattern catalog and a unit-propagation fast path.
//! - [`chain`]: correct chain synthesis by backward goal expansion and
//!   chain verification.
//! - [`inject`]: error injection at a first-error position, counterfactual
//!   recomputation of downstream steps and first-error verification.
//! - [`labels`]: step labeling and weighted error-type sampling.
//! - [`eval`]: step-level judges, first-error / all-step metrics and
//!   Best-of-K selection.
//!
//! IO, serialization, natural-language realization and the command-line
//! front end live in the companion `firsterr` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod chain;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod inject;
pub mod labels;
pub mod logic;
pub mod prover;
pub mod rng;

pub use error::{Error, Result};
