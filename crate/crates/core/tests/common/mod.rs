#![allow(dead_code)]

use std::collections::BTreeSet;

use hetnr::hin::{EdgeType, HinGraph, Schema};
use hetnr::seed::{self, Purpose};
use hetnr::sparse::Csr;
use ndarray::Array2;
use rand::Rng;

/// Random three-type HIN ("A", "B", "C") with at most `max_nodes` nodes and
/// a random subset of the nine directed type pairs as relations (at least
/// one leaving "A").
pub fn random_hin(seed: u64, max_nodes: usize) -> HinGraph {
    let mut rng = seed::rng(seed, Purpose::Synthetic, 4242);
    let names = ["A", "B", "C"];
    let per_type = (max_nodes / 3).max(2);
    let counts: Vec<usize> = (0..3).map(|_| rng.random_range(2..=per_type)).collect();
    let mut edges = Vec::new();
    for s in 0..3 {
        for d in 0..3 {
            if rng.random_bool(0.5) || (s == 0 && d == 1 && edges.is_empty()) {
                edges.push((s, d));
            }
        }
    }
    let density = rng.random_range(0.05..0.35);
    let schema = Schema::new(
        names.iter().map(|s| s.to_string()).collect(),
        edges
            .iter()
            .map(|&(s, d)| EdgeType::new(&format!("{}{}", names[s], names[d]), names[s], names[d]))
            .collect(),
    )
    .unwrap();
    let adjacency = edges
        .iter()
        .map(|&(s, d)| {
            let mut trip = Vec::new();
            for i in 0..counts[s] {
                for j in 0..counts[d] {
                    if rng.random_bool(density) {
                        trip.push((i, j, 1.0));
                    }
                }
            }
            Csr::from_triplets(counts[s], counts[d], &trip)
        })
        .collect();
    let features = counts
        .iter()
        .map(|&n| Array2::from_shape_simple_fn((n, 2), || rng.random_range(-1.0..1.0)))
        .collect();
    HinGraph::new(schema, counts, adjacency, features).unwrap()
}

/// Directed out-neighbors over the union of relations, in global ids.
pub fn out_lists(g: &HinGraph) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); g.total_nodes()];
    for e in 0..g.schema().edge_types().len() {
        let (s, d) = g.schema().endpoints(e);
        for (i, j, _) in g.adjacency(e).iter() {
            out[g.offset(s) + i].push(g.offset(d) + j);
        }
    }
    out
}

/// Endpoints of every walk of exactly `k` steps from `start`, by depth-first
/// enumeration.
pub fn walk_endpoints(out: &[Vec<usize>], start: usize, k: usize) -> BTreeSet<usize> {
    fn go(out: &[Vec<usize>], v: usize, left: usize, acc: &mut BTreeSet<usize>) {
        if left == 0 {
            acc.insert(v);
            return;
        }
        for &w in &out[v] {
            go(out, w, left - 1, acc);
        }
    }
    let mut acc = BTreeSet::new();
    go(out, start, k, &mut acc);
    acc
}

/// Dense `anchors x total_nodes` operator for the given type subset.
pub fn operator_oracle(g: &HinGraph, anchor: usize, k: usize, types: &[usize]) -> Array2<f64> {
    let out = out_lists(g);
    let n_a = g.node_count(anchor);
    let mut m = Array2::zeros((n_a, g.total_nodes()));
    for u in 0..n_a {
        let nu = walk_endpoints(&out, g.offset(anchor) + u, k);
        for &v in &nu {
            if types.contains(&g.type_of(v)) {
                let nv = walk_endpoints(&out, v, k).len().max(1);
                m[[u, v]] = 1.0 / (nu.len() as f64 * nv as f64).sqrt();
            }
        }
    }
    m
}
