//! Bisimulation-style metrics between finite tabular MDPs.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure
//! computation:
//!
//! * [`mdp`]: the tabular MDP model, Garnet generation and exact value
//!   computation.
//! * [`transport`]: exact discrete optimal transport (1-Wasserstein) with
//!   primal plans, dual certificates and coupling gluing.
//! * [`metric`]: fixed-point iteration of the generalized bisimulation metric
//!   and its lax and on-policy variants, plus the total-variation upper metric.
//! * [`bounds`]: transfer-regret, aggregation and estimation bounds built on
//!   those metrics, and the sample-complexity formula.
//! * [`approx`]: aggregated, sampled and noise-perturbed approximate MDPs.
//!
//! File formats, campaigns and the command-line tool live in the `gbsm` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod approx;
pub mod bounds;
mod error;
pub mod mdp;
pub mod metric;
pub(crate) mod num;
pub mod transport;

pub use error::{Error, Result};
pub use mdp::{Policy, TabularMdp, ValueVector};
pub use metric::{DistanceMatrix, MetricKind};
