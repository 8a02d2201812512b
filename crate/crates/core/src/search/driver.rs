use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use super::bilevel::{lambda_gradient, BilevelObjective, LambdaStep};
use super::objective::{Supernet, SupernetMode};
use crate::error::{Error, Result};
use crate::hin::{Fold, TargetTask};
use crate::hop::SearchSpace;
use crate::model::{init_params, mixture_weights, ArchParams, Architecture, Model, Optimizer, OptimizerState};
use crate::seed::{self, Purpose};

/// Absolute gap below which two logits at the same hop count as tied.
///
/// Hops whose candidates receive identical gradients (always the case for a
/// hop with a single non-empty candidate) drift apart only by rounding noise.
pub const TIE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// One-step unrolled hypergradient with a finite-difference second-order term.
    #[default]
    Unrolled,
    FirstOrder,
    /// One sampled candidate per hop per step, straight-through lambda gradient.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub lr_theta: f64,
    pub lr_lambda: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub strategy: Strategy,
    pub fd_epsilon: f64,
    pub seed: u64,
    pub hidden: usize,
    pub theta_optimizer: Optimizer,
    pub lambda_optimizer: Optimizer,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            lr_theta: 0.01,
            lr_lambda: 0.01,
            max_epochs: 500,
            patience: 10,
            strategy: Strategy::Unrolled,
            fd_epsilon: 0.01,
            seed: 0,
            hidden: 64,
            theta_optimizer: Optimizer::Sgd,
            lambda_optimizer: Optimizer::Sgd,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr_theta > 0.0 && self.lr_lambda > 0.0) {
            return Err(Error::Config("search learning rates must be positive".into()));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if !(self.fd_epsilon > 0.0) {
            return Err(Error::Config("fd_epsilon must be positive".into()));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden width must be positive".into()));
        }
        Ok(())
    }

    pub fn lambda_step(&self) -> LambdaStep {
        LambdaStep {
            unrolled: self.strategy == Strategy::Unrolled,
            mu_theta: self.lr_theta,
            fd_epsilon: self.fd_epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_loss: f64,
    /// `softmax(lambda)` per hop after the epoch.
    pub alpha: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub epochs: Vec<EpochRecord>,
    pub epochs_run: usize,
    pub best_epoch: Option<usize>,
    pub best_lambda: ArchParams,
    pub architecture: Architecture,
}

/// Per-hop argmax of the logits, ties (within [`TIE_TOLERANCE`]) going to
/// the lowest index.
pub fn discretize(lambda: &ArchParams, space: &SearchSpace) -> Result<Architecture> {
    if !lambda.matches(space) {
        return Err(Error::ShapeMismatch("architecture logits do not match search space".into()));
    }
    let idx: Vec<usize> = lambda
        .per_hop
        .iter()
        .map(|l| {
            let mut best = 0;
            for (i, &v) in l.iter().enumerate().skip(1) {
                if v > l[best] + TIE_TOLERANCE {
                    best = i;
                }
            }
            best
        })
        .collect();
    Ok(Architecture::from_indices(space, &idx))
}

fn sample_candidates(lambda: &ArchParams, seed: u64, epoch: usize) -> Result<Vec<usize>> {
    let mut rng = seed::rng(seed, Purpose::Sampling, epoch as u64);
    lambda
        .per_hop
        .iter()
        .map(|l| {
            let alpha = mixture_weights(l)?;
            let dist = WeightedIndex::new(&alpha).map_err(|e| Error::NonFiniteInput(e.to_string()))?;
            Ok(dist.sample(&mut rng))
        })
        .collect()
}

/// Alternating bilevel search on one split. Lambda starts at zero; every epoch
/// takes a lambda step then a theta step, and the lambda with the lowest
/// (evaluation-mode) validation loss is discretized.
pub fn search(model: &Model<'_>, task: &TargetTask, fold: &Fold, cfg: &SearchConfig) -> Result<(Architecture, SearchTrace)> {
    cfg.validate()?;
    let space = model.space;
    let template = init_params(model.graph, task, cfg.hidden, cfg.seed)?;
    let mut theta = template.to_flat();
    let mut lambda = ArchParams::zeros(space);
    let mut lam = lambda.to_flat();
    let mut theta_opt = OptimizerState::new(cfg.theta_optimizer, theta.len());
    let mut lambda_opt = OptimizerState::new(cfg.lambda_optimizer, lam.len());
    let step = cfg.lambda_step();

    let mut epochs = Vec::new();
    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    let mut since_best = 0;
    for epoch in 0..cfg.max_epochs {
        let mask = (model.cfg.dropout > 0.0).then(|| model.dropout_mask(cfg.hidden, cfg.seed, epoch as u64));
        lambda.set_flat(&lam);
        let mode = match cfg.strategy {
            Strategy::Sampled => SupernetMode::Sampled(sample_candidates(&lambda, cfg.seed, epoch)?),
            _ => SupernetMode::Mixed,
        };
        let net = Supernet {
            model,
            template: &template,
            labels: task.labels(),
            train_mask: &fold.train,
            valid_mask: &fold.valid,
            dropout: mask.as_ref(),
            mode,
        };
        let lg = lambda_gradient(&net, &theta, &lam, &step)?;
        lambda_opt.step(&mut lam, &lg.grad, cfg.lr_lambda);
        let tg = net.train(&theta, &lam)?;
        if tg.theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient("theta".into()));
        }
        theta_opt.step(&mut theta, &tg.theta, cfg.lr_theta);

        let valid_loss = net.mixed_loss(&theta, &lam, &fold.valid)?;
        lambda.set_flat(&lam);
        epochs.push(EpochRecord {
            epoch,
            train_loss: tg.loss,
            valid_loss,
            alpha: lambda.per_hop.iter().map(|l| mixture_weights(l)).collect::<Result<_>>()?,
        });
        if best.as_ref().is_none_or(|(_, b, _)| valid_loss < *b) {
            best = Some((epoch, valid_loss, lam.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }

    let mut best_lambda = ArchParams::zeros(space);
    let best_epoch = best.map(|(e, _, l)| {
        best_lambda.set_flat(&l);
        e
    });
    let architecture = discretize(&best_lambda, space)?;
    Ok((
        architecture.clone(),
        SearchTrace {
            epochs_run: epochs.len(),
            epochs,
            best_epoch,
            best_lambda,
            architecture,
        },
    ))
}
