//! Planted-signal heterogeneous graph generator.
//!
//! Only nodes of `signal_type` carry class information: node `i` gets latent
//! class `i mod num_classes` and a feature vector `s * e_class + noise` with `s ~ U(0.5, 1.5)`.
//! Every other type gets pure Gaussian noise. An anchor's label is the argmax
//! (lowest index on ties) over the first `num_classes` feature columns of the
//! normalized sum of its `signal_hop`-hop neighbors of `signal_type`, the same
//! aggregation the model uses. Anchors without such neighbors get class 0.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::graph::{HinGraph, TargetTask};
use super::schema::Schema;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::hop::{khop_exact, reachable_types};
use crate::seed::{self, Purpose};
use crate::sparse::Csr;

/// Generator settings.
///
/// Relations missing from `edges_per_relation` whose reverse relation is
/// listed are generated as the transpose of that reverse relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub schema: Schema,
    pub anchor_type: String,
    pub nodes_per_type: BTreeMap<String, usize>,
    pub edges_per_relation: BTreeMap<String, usize>,
    pub feature_dim: usize,
    pub signal_hop: usize,
    pub signal_type: String,
    pub num_classes: usize,
    pub noise_std: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub anchor_type: String,
    pub signal_type: String,
    pub signal_hop: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec::planted_default(0)
    }
}

impl SyntheticSpec {
    /// Author/paper/conference instance with the label signal on conference
    /// nodes two hops from the author anchors.
    pub fn planted_default(seed: u64) -> Self {
        let counts = |pairs: &[(&str, usize)]| pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        SyntheticSpec {
            schema: Schema::dblp(),
            anchor_type: "A".into(),
            nodes_per_type: counts(&[("A", 240), ("P", 480), ("C", 36)]),
            edges_per_relation: counts(&[("AP", 720), ("CP", 480)]),
            feature_dim: 16,
            signal_hop: 2,
            signal_type: "C".into(),
            num_classes: 3,
            noise_std: 0.5,
            seed,
        }
    }

    /// A very small instance, useful for gradient checks.
    pub fn tiny(seed: u64) -> Self {
        let counts = |pairs: &[(&str, usize)]| pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        SyntheticSpec {
            schema: Schema::dblp(),
            anchor_type: "A".into(),
            nodes_per_type: counts(&[("A", 3), ("P", 3), ("C", 2)]),
            edges_per_relation: counts(&[("AP", 5), ("CP", 3)]),
            feature_dim: 3,
            signal_hop: 2,
            signal_type: "C".into(),
            num_classes: 2,
            noise_std: 0.3,
            seed,
        }
    }
}

fn relation_plan(spec: &SyntheticSpec) -> Result<Vec<Source>> {
    let schema = &spec.schema;
    schema
        .edge_types()
        .iter()
        .map(|et| {
            if let Some(&m) = spec.edges_per_relation.get(&et.name) {
                return Ok(Source::Sample(m));
            }
            schema
                .edge_types()
                .iter()
                .position(|o| o.src == et.dst && o.dst == et.src && spec.edges_per_relation.contains_key(&o.name))
                .map(Source::TransposeOf)
                .ok_or_else(|| Error::Config(format!("no edge count for relation {}", et.name)))
        })
        .collect()
}

enum Source {
    Sample(usize),
    TransposeOf(usize),
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(HinGraph, TargetTask, GroundTruth)> {
    let schema = &spec.schema;
    let reach = reachable_types(schema, &spec.anchor_type, spec.signal_hop)?;
    if spec.signal_hop == 0 || !reach.contains(&spec.signal_type) {
        return Err(Error::UnreachableSignal {
            anchor: spec.anchor_type.clone(),
            signal_type: spec.signal_type.clone(),
            hop: spec.signal_hop,
        });
    }
    if spec.feature_dim < spec.num_classes || spec.num_classes == 0 {
        return Err(Error::Config("feature_dim must be at least num_classes > 0".into()));
    }
    if !(spec.noise_std >= 0.0) {
        return Err(Error::Config("noise_std must be nonnegative".into()));
    }
    let counts = schema
        .node_types()
        .iter()
        .map(|t| {
            spec.nodes_per_type
                .get(t)
                .copied()
                .ok_or_else(|| Error::Config(format!("no node count for type {t}")))
        })
        .collect::<Result<Vec<_>>>()?;

    let plan = relation_plan(spec)?;
    let mut adjacency: Vec<Option<Csr>> = vec![None; plan.len()];
    for (e, src) in plan.iter().enumerate() {
        if let Source::Sample(m) = *src {
            let (s, d) = schema.endpoints(e);
            let total = counts[s] * counts[d];
            if m > total {
                return Err(Error::Config(format!(
                    "{m} edges requested for {} but only {total} pairs exist",
                    schema.edge_types()[e].name
                )));
            }
            let mut rng = seed::rng(spec.seed, Purpose::Synthetic, e as u64);
            let trip: Vec<_> = index::sample(&mut rng, total, m)
                .into_iter()
                .map(|p| (p / counts[d], p % counts[d], 1.0))
                .collect();
            adjacency[e] = Some(Csr::from_triplets(counts[s], counts[d], &trip));
        }
    }
    for (e, src) in plan.iter().enumerate() {
        if let Source::TransposeOf(o) = *src {
            adjacency[e] = Some(adjacency[o].as_ref().expect("sampled above").transpose());
        }
    }
    let adjacency: Vec<Csr> = adjacency.into_iter().map(Option::unwrap).collect();

    let signal = schema.type_index(&spec.signal_type)?;
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::Config(e.to_string()))?;
    let features: Vec<Array2<f64>> = counts
        .iter()
        .enumerate()
        .map(|(t, &n)| {
            let mut rng = seed::rng(spec.seed, Purpose::Synthetic, 1000 + t as u64);
            let mut x = Array2::zeros((n, spec.feature_dim));
            for (i, mut row) in x.rows_mut().into_iter().enumerate() {
                if t == signal {
                    row[i % spec.num_classes] = rng.random_range(0.5..1.5);
                }
                for v in row.iter_mut() {
                    *v += noise.sample(&mut rng);
                }
            }
            x
        })
        .collect();
    let graph = HinGraph::new(schema.clone(), counts, adjacency, features)?;

    let nb = khop_exact(&graph, &spec.anchor_type, spec.signal_hop, Exec::Sequential)?;
    let xs = graph.features(signal);
    let labels: Vec<usize> = nb
        .neighbors
        .iter()
        .zip(&nb.neighbor_sizes)
        .map(|(ns, sizes)| {
            let mut score = vec![0.0; spec.num_classes];
            let nu = ns.len() as f64;
            for (&v, &nv) in ns.iter().zip(sizes) {
                let r = graph.node_ref(v);
                if r.node_type == signal {
                    let w = 1.0 / (nu * nv as f64).sqrt();
                    for (c, s) in score.iter_mut().enumerate() {
                        *s += w * xs[[r.id, c]];
                    }
                }
            }
            argmax_lowest(&score)
        })
        .collect();
    let task = TargetTask::new(&graph, &spec.anchor_type, labels, spec.num_classes)?;
    Ok((
        graph,
        task,
        GroundTruth {
            anchor_type: spec.anchor_type.clone(),
            signal_type: spec.signal_type.clone(),
            signal_hop: spec.signal_hop,
        },
    ))
}

fn argmax_lowest(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
