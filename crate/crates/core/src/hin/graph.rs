use ndarray::Array2;

use super::schema::Schema;
use crate::error::{Error, Result};
use crate::sparse::Csr;

/// A node addressed globally: type index plus dense local id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeRef {
    pub node_type: usize,
    pub id: usize,
}

/// Heterogeneous graph with per-relation binary adjacency and per-type
/// feature matrices. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct HinGraph {
    schema: Schema,
    node_counts: Vec<usize>,
    adjacency: Vec<Csr>,
    features: Vec<Array2<f64>>,
    offsets: Vec<usize>,
}

impl HinGraph {
    /// Validates shapes and builds the graph. Adjacency values are forced to
    /// 1.0 (binary relations).
    pub fn new(
        schema: Schema,
        node_counts: Vec<usize>,
        adjacency: Vec<Csr>,
        features: Vec<Array2<f64>>,
    ) -> Result<Self> {
        let nt = schema.num_node_types();
        if node_counts.len() != nt || features.len() != nt {
            return Err(Error::ShapeMismatch(format!(
                "expected {nt} node counts and feature matrices"
            )));
        }
        if adjacency.len() != schema.edge_types().len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} adjacency matrices, got {}",
                schema.edge_types().len(),
                adjacency.len()
            )));
        }
        for (e, adj) in adjacency.iter().enumerate() {
            let (s, d) = schema.endpoints(e);
            if adj.shape() != (node_counts[s], node_counts[d]) {
                return Err(Error::ShapeMismatch(format!(
                    "adjacency {} has shape {:?}, expected ({}, {})",
                    schema.edge_types()[e].name,
                    adj.shape(),
                    node_counts[s],
                    node_counts[d]
                )));
            }
        }
        for (t, x) in features.iter().enumerate() {
            if x.nrows() != node_counts[t] {
                return Err(Error::ShapeMismatch(format!(
                    "features of {} have {} rows, expected {}",
                    schema.node_types()[t],
                    x.nrows(),
                    node_counts[t]
                )));
            }
            if x.ncols() == 0 {
                return Err(Error::FeatureDimInconsistent {
                    node_type: schema.node_types()[t].clone(),
                    expected: 1,
                    got: 0,
                });
            }
        }
        let adjacency = adjacency
            .into_iter()
            .map(|a| {
                let mut pairs: Vec<(usize, usize)> = a.iter().map(|(r, c, _)| (r, c)).collect();
                pairs.sort_unstable();
                pairs.dedup();
                let trip: Vec<_> = pairs.into_iter().map(|(r, c)| (r, c, 1.0)).collect();
                Csr::from_triplets(a.rows(), a.cols(), &trip)
            })
            .collect();
        let mut offsets = Vec::with_capacity(nt + 1);
        offsets.push(0);
        for &c in &node_counts {
            offsets.push(offsets.last().unwrap() + c);
        }
        Ok(HinGraph {
            schema,
            node_counts,
            adjacency,
            features,
            offsets,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn node_counts(&self) -> &[usize] {
        &self.node_counts
    }

    pub fn node_count(&self, t: usize) -> usize {
        self.node_counts[t]
    }

    pub fn total_nodes(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Csr::nnz).sum()
    }

    pub fn adjacency(&self, e: usize) -> &Csr {
        &self.adjacency[e]
    }

    pub fn features(&self, t: usize) -> &Array2<f64> {
        &self.features[t]
    }

    pub fn feature_dim(&self, t: usize) -> usize {
        self.features[t].ncols()
    }

    /// Start of type `t` in the global node numbering.
    pub fn offset(&self, t: usize) -> usize {
        self.offsets[t]
    }

    pub fn global(&self, node: NodeRef) -> usize {
        self.offsets[node.node_type] + node.id
    }

    pub fn node_ref(&self, global: usize) -> NodeRef {
        let t = self.offsets.partition_point(|&o| o <= global) - 1;
        NodeRef {
            node_type: t,
            id: global - self.offsets[t],
        }
    }

    pub fn type_of(&self, global: usize) -> usize {
        self.node_ref(global).node_type
    }

    /// Union of all relations as one directed binary matrix over global ids.
    pub fn union_adjacency(&self) -> Csr {
        let n = self.total_nodes();
        let mut trip = Vec::with_capacity(self.num_edges());
        for (e, adj) in self.adjacency.iter().enumerate() {
            let (s, d) = self.schema.endpoints(e);
            for (r, c, _) in adj.iter() {
                trip.push((self.offsets[s] + r, self.offsets[d] + c, 1.0));
            }
        }
        let m = Csr::from_triplets(n, n, &trip);
        let pattern: Vec<Vec<usize>> = (0..n).map(|r| m.row(r).0.to_vec()).collect();
        Csr::from_pattern(n, &pattern)
    }
}

/// Labels over the nodes of the anchor type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetTask {
    anchor_type: String,
    labels: Vec<usize>,
    num_classes: usize,
}

impl TargetTask {
    pub fn new(graph: &HinGraph, anchor_type: &str, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        let t = graph.schema().type_index(anchor_type)?;
        if labels.len() != graph.node_count(t) {
            return Err(Error::InvalidTask(format!(
                "{} labels for {} nodes of type {anchor_type}",
                labels.len(),
                graph.node_count(t)
            )));
        }
        if num_classes == 0 {
            return Err(Error::InvalidTask("num_classes must be positive".into()));
        }
        let mut present = vec![false; num_classes];
        for &l in &labels {
            if l >= num_classes {
                return Err(Error::InvalidTask(format!("label {l} out of range")));
            }
            present[l] = true;
        }
        if let Some(c) = present.iter().position(|p| !p) {
            return Err(Error::InvalidTask(format!("class {c} never appears")));
        }
        Ok(TargetTask {
            anchor_type: anchor_type.to_string(),
            labels,
            num_classes,
        })
    }

    pub fn anchor_type(&self) -> &str {
        &self.anchor_type
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }
}
