//! Normalized, type-masked hop aggregation operators.
//!
//! Row `u` of the hop-`k` operator for type subset `S` holds
//! `1 / sqrt(|N^k(u)| * |N^k(v)|)` at every `v` in `N^k(u)` with type in `S`.
//! The normalizer uses the full, untyped neighborhood sizes, which makes
//! operators additive over disjoint type subsets.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::neighborhood::HopNeighborhood;
use super::space::{HopCandidate, SearchSpace};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::hin::HinGraph;
use crate::sparse::Csr;

#[derive(Debug, Clone, PartialEq)]
pub struct HopOperator {
    pub hop: usize,
    pub candidate: HopCandidate,
    /// Type indices stacked along the columns, in candidate (name) order.
    pub col_types: Vec<usize>,
    /// Column offset of each entry of `col_types`.
    pub col_offsets: Vec<usize>,
    /// `num_anchors x sum(node_count of col_types)`.
    pub matrix: Csr,
}

pub fn build_hop_operator(graph: &HinGraph, nb: &HopNeighborhood, candidate: &HopCandidate) -> Result<HopOperator> {
    if nb.hop != candidate.hop {
        return Err(Error::HopMismatch {
            neighborhood: nb.hop,
            candidate: candidate.hop,
        });
    }
    let col_types = candidate
        .type_names()
        .iter()
        .map(|t| graph.schema().type_index(t))
        .collect::<Result<Vec<_>>>()?;
    let mut col_offsets = Vec::with_capacity(col_types.len());
    let mut width = 0;
    for &t in &col_types {
        col_offsets.push(width);
        width += graph.node_count(t);
    }
    let mut trip = Vec::new();
    for (u, (ns, sizes)) in nb.neighbors.iter().zip(&nb.neighbor_sizes).enumerate() {
        let nu = ns.len() as f64;
        for (&v, &nv) in ns.iter().zip(sizes) {
            let r = graph.node_ref(v);
            if let Some(slot) = col_types.iter().position(|&t| t == r.node_type) {
                trip.push((u, col_offsets[slot] + r.id, 1.0 / (nu * nv as f64).sqrt()));
            }
        }
    }
    Ok(HopOperator {
        hop: candidate.hop,
        candidate: candidate.clone(),
        col_types,
        col_offsets,
        matrix: Csr::from_triplets(nb.num_anchors(), width, &trip),
    })
}

impl HopOperator {
    /// Same operator with columns re-indexed to global node ids.
    pub fn to_global(&self, graph: &HinGraph) -> Csr {
        let trip: Vec<_> = self
            .matrix
            .iter()
            .map(|(r, c, v)| {
                let slot = self.col_offsets.partition_point(|&o| o <= c) - 1;
                let t = self.col_types[slot];
                (r, graph.offset(t) + c - self.col_offsets[slot], v)
            })
            .collect();
        Csr::from_triplets(self.matrix.rows(), graph.total_nodes(), &trip)
    }

    /// Writes a one-line JSON header followed by little-endian
    /// `(u64 row, u64 col, f64 value)` triplets.
    pub fn write_to<W: Write>(&self, graph: &HinGraph, mut w: W) -> std::io::Result<()> {
        let header = OperatorHeader {
            format: FORMAT.to_string(),
            hop: self.hop,
            select: self.candidate.type_names().to_vec(),
            shape: [self.matrix.rows(), self.matrix.cols()],
            col_types: self
                .col_types
                .iter()
                .map(|&t| graph.schema().node_types()[t].clone())
                .collect(),
            nnz: self.matrix.nnz(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for (r, c, v) in self.matrix.iter() {
            w.write_all(&(r as u64).to_le_bytes())?;
            w.write_all(&(c as u64).to_le_bytes())?;
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(graph: &HinGraph, mut r: R) -> Result<HopOperator> {
        let bad = |m: String| Error::parse("<operator>", m);
        let mut line = Vec::new();
        let mut byte = [0u8; 1];
        loop {
            r.read_exact(&mut byte).map_err(|e| bad(e.to_string()))?;
            if byte[0] == b'\n' {
                break;
            }
            line.push(byte[0]);
        }
        let header: OperatorHeader = serde_json::from_slice(&line).map_err(|e| bad(e.to_string()))?;
        if header.format != FORMAT {
            return Err(bad(format!("unknown operator format {}", header.format)));
        }
        let candidate = HopCandidate::types(header.hop, &header.select);
        let col_types = header
            .col_types
            .iter()
            .map(|t| graph.schema().type_index(t))
            .collect::<Result<Vec<_>>>()?;
        let mut col_offsets = Vec::with_capacity(col_types.len());
        let mut width = 0;
        for &t in &col_types {
            col_offsets.push(width);
            width += graph.node_count(t);
        }
        if width != header.shape[1] {
            return Err(bad(format!("operator width {} does not match graph ({width})", header.shape[1])));
        }
        let mut trip = Vec::with_capacity(header.nnz);
        let mut buf = [0u8; 24];
        for _ in 0..header.nnz {
            r.read_exact(&mut buf).map_err(|e| bad(e.to_string()))?;
            let row = u64::from_le_bytes(buf[0..8].try_into().unwrap()) as usize;
            let col = u64::from_le_bytes(buf[8..16].try_into().unwrap()) as usize;
            let val = f64::from_le_bytes(buf[16..24].try_into().unwrap());
            if row >= header.shape[0] || col >= header.shape[1] {
                return Err(bad(format!("triplet ({row}, {col}) out of bounds")));
            }
            trip.push((row, col, val));
        }
        Ok(HopOperator {
            hop: header.hop,
            candidate,
            col_types,
            col_offsets,
            matrix: Csr::from_triplets(header.shape[0], header.shape[1], &trip),
        })
    }
}

const FORMAT: &str = "hetnr-hop-operator/1";

#[derive(Debug, Serialize, Deserialize)]
struct OperatorHeader {
    format: String,
    hop: usize,
    select: Vec<String>,
    shape: [usize; 2],
    col_types: Vec<String>,
    nnz: usize,
}

/// All hop operators of a search space, with global column indexing, ready
/// for the model's sparse products.
#[derive(Debug, Clone)]
pub struct OperatorBank {
    anchor_type: usize,
    num_anchors: usize,
    total_nodes: usize,
    per_hop: Vec<Vec<Csr>>,
}

/// Hop operators for every candidate of the space, grouped by hop.
/// `neighborhoods[k - 1]` must be the hop-`k` neighborhood.
pub fn build_operators(
    graph: &HinGraph,
    space: &SearchSpace,
    neighborhoods: &[HopNeighborhood],
    exec: Exec,
) -> Result<Vec<Vec<HopOperator>>> {
    if neighborhoods.len() != space.hops() {
        return Err(Error::ShapeMismatch(format!(
            "{} neighborhoods for {} hops",
            neighborhoods.len(),
            space.hops()
        )));
    }
    let jobs: Vec<(usize, HopCandidate)> = space
        .per_hop()
        .iter()
        .enumerate()
        .flat_map(|(h, cs)| cs.iter().map(move |c| (h, c.clone())))
        .collect();
    let built = exec.map_slice(&jobs, |(h, c)| build_hop_operator(graph, &neighborhoods[*h], c));
    let mut per_hop: Vec<Vec<HopOperator>> = vec![Vec::new(); space.hops()];
    for ((h, _), op) in jobs.iter().zip(built) {
        per_hop[*h].push(op?);
    }
    Ok(per_hop)
}

impl OperatorBank {
    /// `neighborhoods[k - 1]` must be the hop-`k` neighborhood.
    pub fn build(graph: &HinGraph, space: &SearchSpace, neighborhoods: &[HopNeighborhood], exec: Exec) -> Result<Self> {
        Self::from_operators(graph, space, &build_operators(graph, space, neighborhoods, exec)?)
    }

    /// Assembles a bank from per-hop operators, which must list the space's
    /// candidates in order.
    pub fn from_operators(graph: &HinGraph, space: &SearchSpace, operators: &[Vec<HopOperator>]) -> Result<Self> {
        let anchor_type = graph.schema().type_index(space.anchor_type())?;
        let matches = operators.len() == space.hops()
            && operators
                .iter()
                .zip(space.per_hop())
                .all(|(ops, cs)| ops.len() == cs.len() && ops.iter().zip(cs).all(|(o, c)| &o.candidate == c));
        if !matches {
            return Err(Error::InconsistentSpace("operators do not match the search space".into()));
        }
        if operators.iter().flatten().any(|o| o.matrix.rows() != graph.node_count(anchor_type)) {
            return Err(Error::ShapeMismatch("operator rows do not match the anchor count".into()));
        }
        Ok(OperatorBank {
            anchor_type,
            num_anchors: graph.node_count(anchor_type),
            total_nodes: graph.total_nodes(),
            per_hop: operators
                .iter()
                .map(|ops| ops.iter().map(|o| o.to_global(graph)).collect())
                .collect(),
        })
    }

    pub fn anchor_type(&self) -> usize {
        self.anchor_type
    }

    pub fn num_anchors(&self) -> usize {
        self.num_anchors
    }

    pub fn total_nodes(&self) -> usize {
        self.total_nodes
    }

    pub fn hops(&self) -> usize {
        self.per_hop.len()
    }

    /// Operators of hop `k` (1-based), in candidate order.
    pub fn hop(&self, k: usize) -> &[Csr] {
        &self.per_hop[k - 1]
    }

    pub fn candidate_counts(&self) -> Vec<usize> {
        self.per_hop.iter().map(Vec::len).collect()
    }
}
