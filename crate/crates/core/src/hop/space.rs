use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hin::Schema;

/// Node types reachable from `anchor` by a directed schema walk of exactly
/// `k` steps.
pub fn reachable_types(schema: &Schema, anchor: &str, k: usize) -> Result<BTreeSet<String>> {
    let a = schema.type_index(anchor)?;
    let nt = schema.num_node_types();
    let mut frontier = vec![false; nt];
    frontier[a] = true;
    for _ in 0..k {
        let mut next = vec![false; nt];
        for e in 0..schema.edge_types().len() {
            let (s, d) = schema.endpoints(e);
            if frontier[s] {
                next[d] = true;
            }
        }
        frontier = next;
    }
    Ok(frontier
        .iter()
        .enumerate()
        .filter(|(_, &on)| on)
        .map(|(t, _)| schema.node_types()[t].clone())
        .collect())
}

/// One candidate aggregation target at a hop: nothing, or a set of node types.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CandidateKind {
    Zero,
    Types(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HopCandidate {
    pub hop: usize,
    pub kind: CandidateKind,
}

impl HopCandidate {
    pub fn zero(hop: usize) -> Self {
        HopCandidate {
            hop,
            kind: CandidateKind::Zero,
        }
    }

    /// Type subset candidate; names are sorted. An empty list means Zero.
    pub fn types<S: AsRef<str>>(hop: usize, names: &[S]) -> Self {
        let mut v: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        v.sort();
        v.dedup();
        if v.is_empty() {
            return HopCandidate::zero(hop);
        }
        HopCandidate {
            hop,
            kind: CandidateKind::Types(v),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, CandidateKind::Zero)
    }

    /// Selected type names; empty for Zero.
    pub fn type_names(&self) -> &[String] {
        match &self.kind {
            CandidateKind::Zero => &[],
            CandidateKind::Types(v) => v,
        }
    }

    pub fn contains(&self, node_type: &str) -> bool {
        self.type_names().iter().any(|t| t == node_type)
    }
}

impl fmt::Display for HopCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            CandidateKind::Zero => write!(f, "O"),
            CandidateKind::Types(v) => write!(f, "{{{}}}", v.join(",")),
        }
    }
}

/// Per-hop candidate lists for one anchor type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchSpace {
    anchor_type: String,
    per_hop: Vec<Vec<HopCandidate>>,
}

/// Candidate lists for hops `1..=k_max`: Zero followed by every nonempty
/// subset of the hop's reachable types, ordered by (size, names).
pub fn build_search_space(schema: &Schema, anchor: &str, k_max: usize) -> Result<SearchSpace> {
    if k_max == 0 {
        return Err(Error::Config("K must be at least 1".into()));
    }
    let per_hop = (1..=k_max)
        .map(|k| {
            let reach: Vec<String> = reachable_types(schema, anchor, k)?.into_iter().collect();
            let mut subsets: Vec<Vec<String>> = (1u64..(1u64 << reach.len()))
                .map(|mask| {
                    reach
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, t)| t.clone())
                        .collect()
                })
                .collect();
            subsets.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
            let mut cands = vec![HopCandidate::zero(k)];
            cands.extend(subsets.into_iter().map(|s| HopCandidate {
                hop: k,
                kind: CandidateKind::Types(s),
            }));
            Ok(cands)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SearchSpace {
        anchor_type: anchor.to_string(),
        per_hop,
    })
}

impl SearchSpace {
    pub fn anchor_type(&self) -> &str {
        &self.anchor_type
    }

    /// Number of hops K.
    pub fn hops(&self) -> usize {
        self.per_hop.len()
    }

    /// Candidates at hop `k` (1-based).
    pub fn candidates(&self, k: usize) -> &[HopCandidate] {
        &self.per_hop[k - 1]
    }

    pub fn per_hop(&self) -> &[Vec<HopCandidate>] {
        &self.per_hop
    }

    pub fn candidate_counts(&self) -> Vec<usize> {
        self.per_hop.iter().map(Vec::len).collect()
    }

    /// Product of per-hop candidate counts (saturating).
    pub fn num_architectures(&self) -> usize {
        self.per_hop.iter().fold(1usize, |acc, c| acc.saturating_mul(c.len()))
    }

    pub fn index_of(&self, cand: &HopCandidate) -> Option<usize> {
        if cand.hop == 0 || cand.hop > self.hops() {
            return None;
        }
        self.candidates(cand.hop).iter().position(|c| c == cand)
    }

    /// Index of the largest candidate (all reachable types) at hop `k`.
    pub fn full_index(&self, k: usize) -> usize {
        self.candidates(k).len() - 1
    }

    /// Every combination of per-hop indices, last hop varying fastest.
    pub fn enumerate(&self) -> Vec<Vec<usize>> {
        let counts = self.candidate_counts();
        let mut out = Vec::with_capacity(self.num_architectures());
        let mut idx = vec![0usize; counts.len()];
        loop {
            out.push(idx.clone());
            let mut h = counts.len();
            loop {
                if h == 0 {
                    return out;
                }
                h -= 1;
                idx[h] += 1;
                if idx[h] < counts[h] {
                    break;
                }
                idx[h] = 0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(space: &SearchSpace, k: usize) -> Vec<String> {
        space.candidates(k).iter().map(|c| c.to_string()).collect()
    }

    #[test]
    fn dblp_reachability() {
        let s = Schema::dblp();
        let r1: Vec<_> = reachable_types(&s, "A", 1).unwrap().into_iter().collect();
        let r2: Vec<_> = reachable_types(&s, "A", 2).unwrap().into_iter().collect();
        assert_eq!(r1, vec!["P"]);
        assert_eq!(r2, vec!["A", "C"]);
        assert!(matches!(reachable_types(&s, "X", 1), Err(Error::UnknownType(_))));
    }

    #[test]
    fn homogeneous_reachability() {
        let s = Schema::from_parts(&["N"], &[("NN", "N", "N")]).unwrap();
        for k in 1..5 {
            assert_eq!(reachable_types(&s, "N", k).unwrap().len(), 1);
        }
    }

    #[test]
    fn dblp_space_enumeration() {
        let space = build_search_space(&Schema::dblp(), "A", 2).unwrap();
        assert_eq!(labels(&space, 1), vec!["O", "{P}"]);
        assert_eq!(labels(&space, 2), vec!["O", "{A}", "{C}", "{A,C}"]);
        assert_eq!(space.num_architectures(), 8);
        assert_eq!(space.enumerate().len(), 8);
        assert_eq!(space.enumerate()[1], vec![0, 1]);
    }

    #[test]
    fn full_schema_bound() {
        let s = Schema::from_parts(
            &["A", "B", "C"],
            &[
                ("AA", "A", "A"),
                ("AB", "A", "B"),
                ("AC", "A", "C"),
                ("BA", "B", "A"),
                ("CA", "C", "A"),
            ],
        )
        .unwrap();
        let space = build_search_space(&s, "A", 3).unwrap();
        assert!(space.num_architectures() <= 512);
        for k in 1..=3 {
            assert!(space.candidates(k).len() <= 8);
        }
        assert_eq!(labels(&space, 1)[1..4], ["{A}", "{B}", "{C}"]);
        assert_eq!(space.candidates(1).last().unwrap().to_string(), "{A,B,C}");
    }

    #[test]
    fn single_reachable_type_gives_two_candidates() {
        let space = build_search_space(&Schema::dblp(), "A", 3).unwrap();
        assert_eq!(space.candidates(1).len(), 2);
        assert_eq!(space.candidates(3).len(), 2);
    }
}
