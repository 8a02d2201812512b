use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::hin::{Fold, TargetTask};
use crate::model::{Architecture, Model};
use crate::train::{evaluate, train_discrete, TrainConfig};

pub const DEFAULT_ORACLE_CAP: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry {
    pub architecture: Architecture,
    /// Position in the space's enumeration order.
    pub index: usize,
    pub mean_valid_macro_f1: f64,
    pub valid_macro_f1: Vec<f64>,
}

/// Trains every architecture of the space once per seed and ranks them by
/// mean validation Macro-F1 (ties by enumeration order).
pub fn exhaustive_oracle(
    model: &Model<'_>,
    task: &TargetTask,
    fold: &Fold,
    cfg: &TrainConfig,
    seeds: &[u64],
    cap: usize,
    exec: Exec,
) -> Result<Vec<OracleEntry>> {
    let space = model.space;
    let size = space.num_architectures();
    if size > cap {
        return Err(Error::SpaceTooLarge { size, cap });
    }
    let archs = space.enumerate();
    let jobs: Vec<(usize, u64)> = (0..archs.len()).flat_map(|a| seeds.iter().map(move |&s| (a, s))).collect();
    let scores = exec
        .map_slice(&jobs, |&(a, s)| {
            let arch = Architecture::from_indices(space, &archs[a]);
            let cfg = TrainConfig { seed: s, ..cfg.clone() };
            let (params, _) = train_discrete(model, task, &arch, fold, &cfg)?;
            Ok(evaluate(model, &params, task, &arch, &fold.valid)?.macro_f1)
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let n = seeds.len().max(1);
    let mut entries: Vec<OracleEntry> = archs
        .iter()
        .enumerate()
        .map(|(i, idx)| {
            let v = scores[i * seeds.len()..(i + 1) * seeds.len()].to_vec();
            OracleEntry {
                architecture: Architecture::from_indices(space, idx),
                index: i,
                mean_valid_macro_f1: v.iter().sum::<f64>() / n as f64,
                valid_macro_f1: v,
            }
        })
        .collect();
    entries.sort_by(|a, b| b.mean_valid_macro_f1.total_cmp(&a.mean_valid_macro_f1).then(a.index.cmp(&b.index)));
    Ok(entries)
}
