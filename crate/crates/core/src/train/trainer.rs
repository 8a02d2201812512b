use serde::{Deserialize, Serialize};

use super::metrics::{f1_scores, predictions, Scores};
use crate::error::{Error, Result};
use crate::hin::{Fold, TargetTask};
use crate::model::{grads, init_params, loss, ArchInput, Architecture, ForwardConfig, Model, ModelParams, Optimizer, OptimizerState, Pass, Wrt};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub hidden: usize,
    pub dropout: f64,
    /// Number of hops.
    pub k: usize,
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.01,
            hidden: 64,
            dropout: 0.2,
            k: 3,
            patience: 10,
            max_epochs: 500,
            seed: 0,
            optimizer: Optimizer::Sgd,
        }
    }
}

impl TrainConfig {
    pub fn forward_config(&self) -> ForwardConfig {
        ForwardConfig {
            k: self.k,
            dropout: self.dropout,
            ..ForwardConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.hidden == 0 || self.k == 0 || self.patience == 0 {
            return Err(Error::Config("hidden, k and patience must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} not in [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainEpoch {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_loss: f64,
    pub train_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainHistory {
    pub epochs: Vec<TrainEpoch>,
    pub best_epoch: Option<usize>,
}

fn accuracy(logits: &ndarray::Array2<f64>, labels: &[usize], mask: &[usize]) -> f64 {
    let p = predictions(logits);
    mask.iter().filter(|&&i| p[i] == labels[i]).count() as f64 / mask.len() as f64
}

/// Trains `arch` from a fresh initialization with early stopping on the
/// validation loss and returns the parameters of the best validation epoch.
pub fn train_discrete(
    model: &Model<'_>,
    task: &TargetTask,
    arch: &Architecture,
    fold: &Fold,
    cfg: &TrainConfig,
) -> Result<(ModelParams, TrainHistory)> {
    cfg.validate()?;
    if model.cfg.k != cfg.k || model.cfg.dropout != cfg.dropout {
        return Err(Error::Config("model and training config disagree on k or dropout".into()));
    }
    let input = ArchInput::Discrete(arch);
    model.mixing(input)?;
    let labels = task.labels();
    let mut params = init_params(model.graph, task, cfg.hidden, cfg.seed)?;
    let mut flat = params.to_flat();
    let mut opt = OptimizerState::new(cfg.optimizer, flat.len());
    let mut best = params.clone();
    let mut history = TrainHistory::default();
    let mut best_loss = f64::INFINITY;
    let mut since_best = 0;
    for epoch in 0..cfg.max_epochs {
        let mask = (cfg.dropout > 0.0).then(|| model.dropout_mask(cfg.hidden, cfg.seed, epoch as u64));
        let pass = mask.as_ref().map_or(Pass::Eval, Pass::Train);
        let g = grads(model, &params, input, labels, &fold.train, pass, Wrt::Theta)?;
        opt.step(&mut flat, &g.theta.expect("theta requested").to_flat(), cfg.lr);
        params.set_flat(&flat);

        let logits = model.logits(&params, input)?;
        let valid_loss = loss(&logits, labels, &fold.valid)?;
        history.epochs.push(TrainEpoch {
            epoch,
            train_loss: g.loss,
            valid_loss,
            train_accuracy: accuracy(&logits, labels, &fold.train),
        });
        if valid_loss < best_loss {
            best_loss = valid_loss;
            best = params.clone();
            history.best_epoch = Some(epoch);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    Ok((best, history))
}

/// Macro and micro F1 of the argmax predictions over `mask`.
pub fn evaluate(model: &Model<'_>, params: &ModelParams, task: &TargetTask, arch: &Architecture, mask: &[usize]) -> Result<Scores> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let p = predictions(&model.logits(params, ArchInput::Discrete(arch))?);
    let labels = task.labels();
    let y: Vec<usize> = mask.iter().map(|&i| labels[i]).collect();
    let yp: Vec<usize> = mask.iter().map(|&i| p[i]).collect();
    f1_scores(&y, &yp, task.num_classes())
}
