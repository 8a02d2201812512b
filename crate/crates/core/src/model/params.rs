use std::fmt;

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hin::{HinGraph, TargetTask};
use crate::hop::{HopCandidate, SearchSpace};
use crate::seed::{self, Purpose};

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    fn uniform<R: Rng>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (fan_in as f64).sqrt();
        Linear {
            weight: Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-bound..bound)),
            bias: Array1::zeros(fan_out),
        }
    }

    fn zeros_like(&self) -> Self {
        Linear {
            weight: Array2::zeros(self.weight.raw_dim()),
            bias: Array1::zeros(self.bias.len()),
        }
    }
}

/// Learnable weights: one input projection per node type and the classifier.
/// Gradients use the same structure.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub proj: Vec<Linear>,
    pub classifier: Linear,
}

/// Fan-in uniform initialization `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`, zero
/// biases.
pub fn init_params(graph: &HinGraph, task: &TargetTask, hidden: usize, seed: u64) -> Result<ModelParams> {
    if hidden == 0 {
        return Err(Error::Config("hidden width must be positive".into()));
    }
    let mut rng = seed::rng(seed, Purpose::Init, 0);
    let proj = (0..graph.schema().num_node_types())
        .map(|t| Linear::uniform(graph.feature_dim(t), hidden, &mut rng))
        .collect();
    let classifier = Linear::uniform(hidden, task.num_classes(), &mut rng);
    Ok(ModelParams { proj, classifier })
}

impl ModelParams {
    pub fn hidden(&self) -> usize {
        self.classifier.weight.nrows()
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams {
            proj: self.proj.iter().map(Linear::zeros_like).collect(),
            classifier: self.classifier.zeros_like(),
        }
    }

    fn linears(&self) -> impl Iterator<Item = &Linear> {
        self.proj.iter().chain(std::iter::once(&self.classifier))
    }

    fn linears_mut(&mut self) -> impl Iterator<Item = &mut Linear> {
        self.proj.iter_mut().chain(std::iter::once(&mut self.classifier))
    }

    pub fn num_params(&self) -> usize {
        self.linears().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Flattened in the order proj[0].weight, proj[0].bias, ...,
    /// classifier.weight, classifier.bias (row-major).
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in self.linears() {
            out.extend(l.weight.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params(), "flat parameter length");
        let mut it = flat.iter();
        for l in self.linears_mut() {
            l.weight.iter_mut().chain(l.bias.iter_mut()).for_each(|v| *v = *it.next().unwrap());
        }
    }

    pub fn is_finite(&self) -> bool {
        self.linears()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    /// `(name, shape, values)` for every tensor, in flat order.
    pub fn named_tensors(&self, type_names: &[String]) -> Vec<(String, Vec<usize>, Vec<f64>)> {
        let mut out = Vec::new();
        let names = type_names
            .iter()
            .map(|t| format!("proj.{t}"))
            .chain(std::iter::once("classifier".to_string()));
        for (prefix, l) in names.zip(self.linears()) {
            out.push((format!("{prefix}.weight"), l.weight.shape().to_vec(), l.weight.iter().copied().collect()));
            out.push((format!("{prefix}.bias"), vec![l.bias.len()], l.bias.to_vec()));
        }
        out
    }
}

/// Per-hop architecture logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchParams {
    pub per_hop: Vec<Vec<f64>>,
}

impl ArchParams {
    /// All-zero logits: a uniform mixture at every hop.
    pub fn zeros(space: &SearchSpace) -> Self {
        ArchParams {
            per_hop: space.candidate_counts().into_iter().map(|m| vec![0.0; m]).collect(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.per_hop.iter().flatten().copied().collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut it = flat.iter();
        for v in self.per_hop.iter_mut().flatten() {
            *v = *it.next().expect("flat logits too short");
        }
        assert!(it.next().is_none(), "flat logits too long");
    }

    pub fn len(&self) -> usize {
        self.per_hop.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn matches(&self, space: &SearchSpace) -> bool {
        self.per_hop.iter().map(Vec::len).eq(space.candidate_counts())
    }
}

/// A discrete per-hop selection.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Architecture {
    pub per_hop: Vec<HopCandidate>,
}

impl Architecture {
    pub fn from_indices(space: &SearchSpace, indices: &[usize]) -> Self {
        Architecture {
            per_hop: indices
                .iter()
                .enumerate()
                .map(|(h, &i)| space.candidates(h + 1)[i].clone())
                .collect(),
        }
    }

    pub fn indices(&self, space: &SearchSpace) -> Result<Vec<usize>> {
        if self.per_hop.len() != space.hops() {
            return Err(Error::ShapeMismatch(format!(
                "architecture has {} hops, search space {}",
                self.per_hop.len(),
                space.hops()
            )));
        }
        self.per_hop
            .iter()
            .map(|c| {
                space
                    .index_of(c)
                    .ok_or_else(|| Error::ShapeMismatch(format!("candidate {c} at hop {} not in space", c.hop)))
            })
            .collect()
    }

    pub fn hops(&self) -> usize {
        self.per_hop.len()
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.per_hop.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

#[derive(Serialize, Deserialize)]
struct HopJson {
    k: usize,
    select: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ArchJson {
    hops: Vec<HopJson>,
}

impl Serialize for Architecture {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ArchJson {
            hops: self
                .per_hop
                .iter()
                .map(|c| HopJson {
                    k: c.hop,
                    select: c.type_names().to_vec(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Architecture {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = ArchJson::deserialize(d)?;
        Ok(Architecture {
            per_hop: raw.hops.iter().map(|h| HopCandidate::types(h.k, &h.select)).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hin::{generate_synthetic, SyntheticSpec};
    use crate::hop::build_search_space;

    #[test]
    fn init_is_deterministic_and_bounded() {
        let (g, t, _) = generate_synthetic(&SyntheticSpec::tiny(1)).unwrap();
        let a = init_params(&g, &t, 5, 11).unwrap();
        assert_eq!(a, init_params(&g, &t, 5, 11).unwrap());
        assert_ne!(a, init_params(&g, &t, 5, 12).unwrap());
        assert_eq!(a.proj[0].weight.shape(), &[3, 5]);
        let bound = 1.0 / 3f64.sqrt();
        assert!(a.proj[0].weight.iter().all(|w| w.abs() <= bound));
        assert!(a.proj[0].bias.iter().all(|&b| b == 0.0));
        let one = init_params(&g, &t, 1, 0).unwrap();
        assert_eq!(one.hidden(), 1);
        assert!(init_params(&g, &t, 0, 0).is_err());
    }

    #[test]
    fn flat_round_trip() {
        let (g, t, _) = generate_synthetic(&SyntheticSpec::tiny(1)).unwrap();
        let p = init_params(&g, &t, 4, 1).unwrap();
        let mut q = p.zeros_like();
        q.set_flat(&p.to_flat());
        assert_eq!(p, q);
        assert_eq!(p.num_params(), 3 * (3 * 4 + 4) + 4 * 2 + 2);
    }

    #[test]
    fn architecture_json() {
        let space = build_search_space(&crate::hin::Schema::dblp(), "A", 2).unwrap();
        let arch = Architecture::from_indices(&space, &[1, 3]);
        let json = serde_json::to_string(&arch).unwrap();
        assert_eq!(json, r#"{"hops":[{"k":1,"select":["P"]},{"k":2,"select":["A","C"]}]}"#);
        let back: Architecture = serde_json::from_str(&json).unwrap();
        assert_eq!(back.indices(&space).unwrap(), vec![1, 3]);
        let zero: Architecture = serde_json::from_str(r#"{"hops":[{"k":1,"select":[]},{"k":2,"select":["C"]}]}"#).unwrap();
        assert_eq!(zero.indices(&space).unwrap(), vec![0, 2]);
        assert_eq!(zero.to_string(), "(O, {C})");
    }
}
