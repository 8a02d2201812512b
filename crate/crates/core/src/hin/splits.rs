use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::graph::TargetTask;
use crate::error::{Error, Result};
use crate::seed::{self, Purpose};

/// Anchor-node index sets for one cross-validation fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSet {
    pub folds: Vec<Fold>,
    pub train_fraction_used: f64,
}

/// K-fold splits over the anchor nodes.
///
/// Test folds partition a seeded permutation of the anchors. The remainder of
/// each fold is split 2:1 into train and valid (53.3% / 26.7% overall at five
/// folds), then train is subsampled to `train_fraction`. With `num_folds == 1`
/// a single hold-out split with a 20% test set is produced.
pub fn make_splits(task: &TargetTask, num_folds: usize, train_fraction: f64, seed: u64) -> Result<SplitSet> {
    let n = task.labels().len();
    if num_folds == 0 {
        return Err(Error::Config("num_folds must be at least 1".into()));
    }
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(Error::Config(format!("train fraction {train_fraction} not in (0, 1]")));
    }
    let min_nodes = num_folds.max(3);
    if n < min_nodes {
        return Err(Error::TooFewNodes { nodes: n, folds: num_folds });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seed::rng(seed, Purpose::Splits, 0));

    let bounds: Vec<(usize, usize)> = if num_folds == 1 {
        vec![(0, (n as f64 * 0.2).round().max(1.0) as usize)]
    } else {
        (0..num_folds)
            .map(|f| (f * n / num_folds, (f + 1) * n / num_folds))
            .collect()
    };

    let folds = bounds
        .into_iter()
        .enumerate()
        .map(|(f, (lo, hi))| {
            let mut test = perm[lo..hi].to_vec();
            let mut rest: Vec<usize> = perm[..lo].iter().chain(&perm[hi..]).copied().collect();
            rest.shuffle(&mut seed::rng(seed, Purpose::Splits, f as u64 + 1));
            let n_train = ((rest.len() as f64) * 2.0 / 3.0).round() as usize;
            let mut valid = rest.split_off(n_train);
            let mut train = rest;
            let keep = ((train.len() as f64 * train_fraction).round() as usize).clamp(1, train.len().max(1));
            train.truncate(keep);
            train.sort_unstable();
            valid.sort_unstable();
            test.sort_unstable();
            Fold { train, valid, test }
        })
        .collect();
    Ok(SplitSet {
        folds,
        train_fraction_used: train_fraction,
    })
}
