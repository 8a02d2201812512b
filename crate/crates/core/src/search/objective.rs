use ndarray::Array2;

use super::bilevel::{BilevelObjective, LossGrads};
use crate::error::{Error, Result};
use crate::model::{cross_entropy, softmax_backward, ArchParams, DropoutMask, Mixing, Model, ModelParams, Pass};

/// How the supernet combines candidates at a step.
#[derive(Debug, Clone, PartialEq)]
pub enum SupernetMode {
    /// `softmax(lambda)`-weighted sum of every candidate.
    Mixed,
    /// One candidate per hop; the lambda gradient is the straight-through
    /// estimate at the sample.
    Sampled(Vec<usize>),
}

/// The mixed model as a bilevel objective over flat `theta` and `lambda`.
pub struct Supernet<'a, 'm> {
    pub model: &'a Model<'m>,
    pub template: &'a ModelParams,
    pub labels: &'a [usize],
    pub train_mask: &'a [usize],
    pub valid_mask: &'a [usize],
    /// Dropout applied to the training objective.
    pub dropout: Option<&'a DropoutMask>,
    pub mode: SupernetMode,
}

impl Supernet<'_, '_> {
    fn unflatten(&self, theta: &[f64], lambda: &[f64]) -> Result<(ModelParams, ArchParams)> {
        if theta.len() != self.template.num_params() {
            return Err(Error::ShapeMismatch("flat parameter length".into()));
        }
        let mut params = self.template.clone();
        params.set_flat(theta);
        let mut arch = ArchParams::zeros(self.model.space);
        if lambda.len() != arch.len() {
            return Err(Error::ShapeMismatch("flat architecture logit length".into()));
        }
        arch.set_flat(lambda);
        Ok((params, arch))
    }

    fn eval(&self, theta: &[f64], lambda: &[f64], mask: &[usize], pass: Pass<'_>) -> Result<LossGrads> {
        let (params, arch) = self.unflatten(theta, lambda)?;
        let alpha = match self.model.mixing(crate::model::ArchInput::Lambda(&arch))? {
            Mixing::Weighted(a) => a,
            Mixing::Discrete(_) => unreachable!(),
        };
        let mixing = match &self.mode {
            SupernetMode::Mixed => Mixing::Weighted(alpha.clone()),
            SupernetMode::Sampled(idx) => Mixing::Discrete(idx.clone()),
        };
        let fwd = self.model.forward(&params, &mixing, pass)?;
        let (loss, d_logits) = cross_entropy(&fwd.logits, self.labels, mask)?;
        let (g, d_weights) = self.model.backward(&params, &mixing, &fwd, &d_logits);
        let lambda_grad = alpha
            .iter()
            .zip(&d_weights)
            .flat_map(|(a, d)| softmax_backward(a, d))
            .collect();
        Ok(LossGrads {
            loss,
            theta: g.to_flat(),
            lambda: lambda_grad,
        })
    }

    /// Evaluation-mode loss of the mixed supernet.
    pub fn mixed_loss(&self, theta: &[f64], lambda: &[f64], mask: &[usize]) -> Result<f64> {
        let (params, arch) = self.unflatten(theta, lambda)?;
        let logits: Array2<f64> = self.model.logits(&params, crate::model::ArchInput::Lambda(&arch))?;
        crate::model::loss(&logits, self.labels, mask)
    }
}

impl BilevelObjective for Supernet<'_, '_> {
    fn train(&self, theta: &[f64], lambda: &[f64]) -> Result<LossGrads> {
        let pass = self.dropout.map_or(Pass::Eval, Pass::Train);
        self.eval(theta, lambda, self.train_mask, pass)
    }

    fn valid(&self, theta: &[f64], lambda: &[f64]) -> Result<LossGrads> {
        self.eval(theta, lambda, self.valid_mask, Pass::Eval)
    }
}
