use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hin::SyntheticSpec;
use crate::hop::NeighborhoodMode;
use crate::model::Optimizer;
use crate::search::{SearchConfig, Strategy};
use crate::train::TrainConfig;

/// Contents of `run.json`. Every field is optional; precedence is built-in
/// defaults, then the file, then command-line flags.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed for single-seed commands.
    pub seed: u64,
    pub data: DataSection,
    pub model: ModelSection,
    pub search: SearchSection,
    pub train: TrainSection,
    pub eval: EvalSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Dataset directory (read by every command except `generate`, which
    /// writes it).
    pub dir: PathBuf,
    /// Labeled node type; read from `ground_truth.json` when absent.
    pub anchor: Option<String>,
    pub neighborhood: NeighborhoodMode,
    pub cache_operators: bool,
    pub synthetic: SyntheticSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub k: usize,
    pub hidden: usize,
    pub dropout: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub lr_theta: f64,
    pub lr_lambda: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub strategy: Strategy,
    pub fd_epsilon: f64,
    pub theta_optimizer: Optimizer,
    pub lambda_optimizer: Optimizer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub lr: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub optimizer: Optimizer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub num_folds: usize,
    /// Fold used by `search`, `retrain` and `oracle`.
    pub fold: usize,
    pub train_fraction: f64,
    pub split_seed: u64,
    /// Seeds for multi-seed commands; `[seed]` when absent.
    pub seeds: Option<Vec<u64>>,
    pub oracle_cap: usize,
    /// Also cross-validate the full search-then-retrain protocol in `eval`.
    pub include_search: bool,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            dir: PathBuf::from("data"),
            anchor: None,
            neighborhood: NeighborhoodMode::Exact,
            cache_operators: true,
            synthetic: SyntheticSpec::default(),
        }
    }
}

impl Default for ModelSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        ModelSection {
            k: t.k,
            hidden: t.hidden,
            dropout: t.dropout,
        }
    }
}

impl Default for SearchSection {
    fn default() -> Self {
        let s = SearchConfig::default();
        SearchSection {
            lr_theta: s.lr_theta,
            lr_lambda: s.lr_lambda,
            max_epochs: s.max_epochs,
            patience: s.patience,
            strategy: s.strategy,
            fd_epsilon: s.fd_epsilon,
            theta_optimizer: s.theta_optimizer,
            lambda_optimizer: s.lambda_optimizer,
        }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            lr: t.lr,
            patience: t.patience,
            max_epochs: t.max_epochs,
            optimizer: t.optimizer,
        }
    }
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            num_folds: 5,
            fold: 0,
            train_fraction: 1.0,
            split_seed: 0,
            seeds: None,
            oracle_cap: crate::search::DEFAULT_ORACLE_CAP,
            include_search: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.eval.seeds.clone().unwrap_or_else(|| vec![self.seed])
    }

    pub fn search_config(&self, seed: u64) -> SearchConfig {
        let s = &self.search;
        SearchConfig {
            lr_theta: s.lr_theta,
            lr_lambda: s.lr_lambda,
            max_epochs: s.max_epochs,
            patience: s.patience,
            strategy: s.strategy,
            fd_epsilon: s.fd_epsilon,
            seed,
            hidden: self.model.hidden,
            theta_optimizer: s.theta_optimizer,
            lambda_optimizer: s.lambda_optimizer,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            lr: self.train.lr,
            hidden: self.model.hidden,
            dropout: self.model.dropout,
            k: self.model.k,
            patience: self.train.patience,
            max_epochs: self.train.max_epochs,
            seed,
            optimizer: self.train.optimizer,
        }
    }
}

/// Parses `3`, `0..9` (inclusive) or `1,4,7`.
pub fn parse_seeds(s: &str) -> std::result::Result<Vec<u64>, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("bad seed range start: {e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("bad seed range end: {e}"))?;
        if b < a {
            return Err(format!("empty seed range {s}"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|p| p.trim().parse::<u64>().map_err(|e| format!("bad seed `{p}`: {e}")))
        .collect()
}
