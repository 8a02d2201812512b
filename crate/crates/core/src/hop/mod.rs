//! Schema reachability, search spaces, neighborhoods and hop operators.

mod neighborhood;
mod operator;
mod space;

pub use neighborhood::{khop_exact, khop_randomwalk, mean_jaccard, walk_reach, HopNeighborhood, WalkConfig};
pub use operator::{build_hop_operator, build_operators, HopOperator, OperatorBank};
pub use space::{build_search_space, reachable_types, CandidateKind, HopCandidate, SearchSpace};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exec::Exec;
use crate::hin::HinGraph;

/// How k-hop neighborhoods are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum NeighborhoodMode {
    Exact,
    RandomWalk(WalkConfig),
}

/// Neighborhoods for hops `1..=k_max`.
pub fn neighborhoods(
    graph: &HinGraph,
    anchor: &str,
    k_max: usize,
    mode: NeighborhoodMode,
    exec: Exec,
) -> Result<Vec<HopNeighborhood>> {
    (1..=k_max)
        .map(|k| match mode {
            NeighborhoodMode::Exact => khop_exact(graph, anchor, k, exec),
            NeighborhoodMode::RandomWalk(cfg) => khop_randomwalk(graph, anchor, k, &cfg, exec),
        })
        .collect()
}
