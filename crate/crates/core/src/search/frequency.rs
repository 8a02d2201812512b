use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hop::HopCandidate;
use crate::model::Architecture;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateFrequency {
    /// Selected node types; empty for Zero.
    pub select: Vec<String>,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopFrequencies {
    pub k: usize,
    pub candidates: Vec<CandidateFrequency>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureFrequency {
    pub architecture: Architecture,
    pub frequency: f64,
}

/// Hop-wise and model-wise selection frequencies over a set of runs. Entries
/// are listed in order of first occurrence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub runs: usize,
    pub hop_wise: Vec<HopFrequencies>,
    pub model_wise: Vec<ArchitectureFrequency>,
}

fn first_max<T>(items: &[T], f: impl Fn(&T) -> f64) -> Option<&T> {
    let mut best: Option<&T> = None;
    for it in items {
        if best.is_none_or(|b| f(it) > f(b)) {
            best = Some(it);
        }
    }
    best
}

impl FrequencyTable {
    /// Most frequent candidate at every hop, assembled into an architecture.
    pub fn hop_wise_mode(&self) -> Architecture {
        Architecture {
            per_hop: self
                .hop_wise
                .iter()
                .map(|h| {
                    let c = first_max(&h.candidates, |c| c.frequency).expect("nonempty hop");
                    HopCandidate::types(h.k, &c.select)
                })
                .collect(),
        }
    }

    /// Most frequent full architecture.
    pub fn model_wise_mode(&self) -> &Architecture {
        &first_max(&self.model_wise, |a| a.frequency).expect("nonempty runs").architecture
    }
}

fn bump<K: PartialEq>(counts: &mut Vec<(K, usize)>, key: K) {
    match counts.iter_mut().find(|(k, _)| *k == key) {
        Some((_, c)) => *c += 1,
        None => counts.push((key, 1)),
    }
}

pub fn selection_frequency(runs: &[Architecture]) -> Result<FrequencyTable> {
    let first = runs
        .first()
        .ok_or_else(|| Error::InconsistentSpace("no runs to aggregate".into()))?;
    let hops = first.hops();
    for r in runs {
        if r.hops() != hops || r.per_hop.iter().enumerate().any(|(i, c)| c.hop != i + 1) {
            return Err(Error::InconsistentSpace(format!("architecture {r} does not match {first}")));
        }
    }
    let n = runs.len() as f64;
    let hop_wise = (0..hops)
        .map(|h| {
            let mut counts: Vec<(&HopCandidate, usize)> = Vec::new();
            for r in runs {
                bump(&mut counts, &r.per_hop[h]);
            }
            HopFrequencies {
                k: h + 1,
                candidates: counts
                    .into_iter()
                    .map(|(c, k)| CandidateFrequency {
                        select: c.type_names().to_vec(),
                        frequency: k as f64 / n,
                    })
                    .collect(),
            }
        })
        .collect();
    let mut counts: Vec<(&Architecture, usize)> = Vec::new();
    for r in runs {
        bump(&mut counts, r);
    }
    Ok(FrequencyTable {
        runs: runs.len(),
        hop_wise,
        model_wise: counts
            .into_iter()
            .map(|(a, k)| ArchitectureFrequency {
                architecture: a.clone(),
                frequency: k as f64 / n,
            })
            .collect(),
    })
}
