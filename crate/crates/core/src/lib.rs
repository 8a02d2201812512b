//! Non-recursive heterogeneous graph neural network with a differentiable
//! search over the node types aggregated at each hop.
//!
//! The pipeline: load or generate a [`hin::HinGraph`], build the per-hop
//! [`hop::SearchSpace`] and normalized [`hop::OperatorBank`], search an
//! [`model::Architecture`] with [`search::search`], retrain it with
//! [`train::train_discrete`] and score it with [`train::evaluate`].

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod exec;
pub mod hin;
pub mod hop;
pub mod model;
pub mod report;
pub mod search;
pub mod seed;
pub mod sparse;
pub mod train;

pub use error::{Error, Result};
pub use exec::Exec;
