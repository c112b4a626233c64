//! Nonstationary newsvendor toolkit.
//!
//! The crate is split along the lines of an experiment pipeline:
//!
//! - [`demand`]: demand families, closed-form expected newsvendor cost,
//!   optimal order quantities, demand variation and prediction error.
//! - [`policies`]: online ordering policies behind the [`policies::OrderPolicy`]
//!   step interface (fixed window, shrinking window, prediction following,
//!   PERP, Exp3 and divide-into-cases).
//! - [`instances`]: adversarial lower-bound instances, Holt-Winters synthetic
//!   streams and CSV ingestion for real demand series.
//! - [`sim`]: episode execution, regret accounting, GAP, replication and
//!   slope fitting.
//! - [`experiment`]: config-driven runner behind the `newsvendor` binary.

// `!(x >= 0.0)` is used on purpose: it rejects NaN along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod demand;
pub mod error;
pub mod experiment;
pub mod instances;
pub mod policies;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
