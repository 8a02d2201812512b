//! Heterogeneous graph data model, dataset files, splits and the planted
//! benchmark generator.

mod graph;
pub mod io;
mod schema;
mod splits;
mod synthetic;

pub use graph::{HinGraph, NodeRef, TargetTask};
pub use schema::{EdgeType, Schema};
pub use splits::{make_splits, Fold, SplitSet};
pub use synthetic::{generate_synthetic, GroundTruth, SyntheticSpec};
