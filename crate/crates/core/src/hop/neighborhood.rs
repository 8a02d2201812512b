//! Exact and random-walk k-hop neighborhoods.
//!
//! A k-hop neighbor of `u` is any node at the end of a directed walk of
//! exactly `k` steps over the union of all relations. `u` itself is included
//! when a closed walk of length `k` exists.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::hin::HinGraph;
use crate::seed::{self, Purpose};
use crate::sparse::Csr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopNeighborhood {
    pub hop: usize,
    pub anchor_type: usize,
    /// Sorted global ids of `N^k(u)` per anchor node.
    pub neighbors: Vec<Vec<usize>>,
    /// `|N^k(v)|` for each entry of `neighbors`, clamped to at least 1.
    pub neighbor_sizes: Vec<Vec<usize>>,
    /// Anchors with no outgoing edge at all.
    pub isolated: Vec<usize>,
}

impl HopNeighborhood {
    /// `|N^k(u)|` of anchor `u`.
    pub fn size(&self, u: usize) -> usize {
        self.neighbors[u].len()
    }

    pub fn num_anchors(&self) -> usize {
        self.neighbors.len()
    }
}

fn check_hop(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Config("hop must be at least 1".into()));
    }
    Ok(())
}

/// Rows of `R^k` for the given sources, via `k` boolean sparse products of a
/// row selector with the union adjacency `R`.
pub fn walk_reach(adj: &Csr, sources: &[usize], k: usize, exec: Exec) -> Csr {
    let selector: Vec<Vec<usize>> = sources.iter().map(|&s| vec![s]).collect();
    let mut m = Csr::from_pattern(adj.rows(), &selector);
    for _ in 0..k {
        m = m.bool_matmul(adj, exec);
    }
    m
}

fn isolated(adj: &Csr, graph: &HinGraph, anchor_type: usize) -> Vec<usize> {
    let off = graph.offset(anchor_type);
    (0..graph.node_count(anchor_type))
        .filter(|&u| adj.row(off + u).0.is_empty())
        .collect()
}

pub fn khop_exact(graph: &HinGraph, anchor: &str, k: usize, exec: Exec) -> Result<HopNeighborhood> {
    check_hop(k)?;
    let a = graph.schema().type_index(anchor)?;
    let adj = graph.union_adjacency();
    let off = graph.offset(a);
    let anchors: Vec<usize> = (off..off + graph.node_count(a)).collect();
    let rows = walk_reach(&adj, &anchors, k, exec);
    let neighbors: Vec<Vec<usize>> = (0..rows.rows()).map(|r| rows.row(r).0.to_vec()).collect();

    let distinct: Vec<usize> = neighbors
        .iter()
        .flatten()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let reach_v = walk_reach(&adj, &distinct, k, exec);
    let size_of: HashMap<usize, usize> = distinct
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, reach_v.row(i).0.len().max(1)))
        .collect();
    let neighbor_sizes = neighbors
        .iter()
        .map(|ns| ns.iter().map(|v| size_of[v]).collect())
        .collect();
    Ok(HopNeighborhood {
        hop: k,
        anchor_type: a,
        neighbors,
        neighbor_sizes,
        isolated: isolated(&adj, graph, a),
    })
}

/// Parameters of the random-walk neighborhood estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct WalkConfig {
    pub num_walks: usize,
    pub walk_len: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            num_walks: 1000,
            walk_len: 4,
            seed: 0,
        }
    }
}

/// Distinct nodes observed at step `k` of `num_walks` uniform walks from
/// `start`. The walk RNG is derived from `(seed, start)` only, so the result
/// does not depend on scheduling.
fn sampled_reach(adj: &Csr, start: usize, k: usize, cfg: &WalkConfig) -> Vec<usize> {
    let mut rng = seed::rng(cfg.seed, Purpose::Walks, start as u64);
    let mut hits = BTreeSet::new();
    for _ in 0..cfg.num_walks {
        let mut cur = start;
        for step in 1..=cfg.walk_len {
            let nbrs = adj.row(cur).0;
            if nbrs.is_empty() {
                break;
            }
            cur = nbrs[rng.random_range(0..nbrs.len())];
            if step == k {
                hits.insert(cur);
            }
        }
    }
    hits.into_iter().collect()
}

/// Random-walk estimate of the k-hop neighborhoods of every anchor.
///
/// Each anchor launches `num_walks` walks of `walk_len` steps; the node at
/// step `k` joins its estimated set. `|N^k(v)|` for a sampled neighbor is
/// the size of `v`'s own estimated set, obtained with the same estimator
/// seeded by `v`; anchors reuse their estimate.
pub fn khop_randomwalk(
    graph: &HinGraph,
    anchor: &str,
    k: usize,
    cfg: &WalkConfig,
    exec: Exec,
) -> Result<HopNeighborhood> {
    check_hop(k)?;
    if cfg.walk_len < k {
        return Err(Error::Config(format!("walk length {} shorter than hop {k}", cfg.walk_len)));
    }
    let a = graph.schema().type_index(anchor)?;
    let adj = graph.union_adjacency();
    let off = graph.offset(a);
    let n_a = graph.node_count(a);
    let neighbors = exec.map_range(n_a, |u| sampled_reach(&adj, off + u, k, cfg));

    let others: Vec<usize> = neighbors
        .iter()
        .flatten()
        .copied()
        .filter(|&v| !(off..off + n_a).contains(&v))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let other_sizes = exec.map_slice(&others, |&v| sampled_reach(&adj, v, k, cfg).len());
    let mut size_of: HashMap<usize, usize> = others.into_iter().zip(other_sizes).collect();
    for (u, ns) in neighbors.iter().enumerate() {
        size_of.insert(off + u, ns.len());
    }
    let neighbor_sizes = neighbors
        .iter()
        .map(|ns| ns.iter().map(|v| size_of[v].max(1)).collect())
        .collect();
    let isolated = isolated(&adj, graph, a);
    if !isolated.is_empty() {
        log::warn!("{} isolated anchor nodes have empty walk neighborhoods", isolated.len());
    }
    Ok(HopNeighborhood {
        hop: k,
        anchor_type: a,
        neighbors,
        neighbor_sizes,
        isolated,
    })
}

/// Mean Jaccard similarity of per-anchor neighbor sets. Two empty sets count
/// as identical.
pub fn mean_jaccard(a: &HopNeighborhood, b: &HopNeighborhood) -> f64 {
    let n = a.num_anchors();
    if n == 0 {
        return 1.0;
    }
    let total: f64 = a
        .neighbors
        .iter()
        .zip(&b.neighbors)
        .map(|(x, y)| {
            let xs: BTreeSet<_> = x.iter().collect();
            let ys: BTreeSet<_> = y.iter().collect();
            let union = xs.union(&ys).count();
            if union == 0 {
                1.0
            } else {
                xs.intersection(&ys).count() as f64 / union as f64
            }
        })
        .sum();
    total / n as f64
}
