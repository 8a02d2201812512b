use ndarray::Array2;

use super::loss::cross_entropy;
use super::net::{softmax_backward, ArchInput, Mixing, Model, Pass};
use super::params::{ArchParams, ModelParams};
use crate::error::{Error, Result};

/// Which gradients to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wrt {
    Theta,
    Lambda,
    Both,
}

#[derive(Debug, Clone)]
pub struct Gradients {
    pub loss: f64,
    pub logits: Array2<f64>,
    pub theta: Option<ModelParams>,
    pub lambda: Option<ArchParams>,
}

/// Loss over `mask` and its exact gradients.
///
/// With `ArchInput::Lambda` the lambda gradient is exact. `Wrt::Lambda` with a
/// discrete architecture is rejected.
pub fn grads(
    model: &Model<'_>,
    params: &ModelParams,
    input: ArchInput<'_>,
    labels: &[usize],
    mask: &[usize],
    pass: Pass<'_>,
    wrt: Wrt,
) -> Result<Gradients> {
    let mixing = model.mixing(input)?;
    if wrt != Wrt::Theta && !matches!(input, ArchInput::Lambda(_)) {
        return Err(Error::Config("lambda gradient requires architecture logits".into()));
    }
    let fwd = model.forward(params, &mixing, pass)?;
    let (loss, d_logits) = cross_entropy(&fwd.logits, labels, mask)?;
    let (theta, d_weights) = model.backward(params, &mixing, &fwd, &d_logits);
    let lambda = match (&mixing, wrt) {
        (Mixing::Weighted(alpha), Wrt::Lambda | Wrt::Both) => Some(ArchParams {
            per_hop: alpha
                .iter()
                .zip(&d_weights)
                .map(|(a, d)| softmax_backward(a, d))
                .collect(),
        }),
        _ => None,
    };
    for (name, ok) in [
        ("theta", theta.is_finite()),
        ("lambda", lambda.as_ref().is_none_or(|l| l.to_flat().iter().all(|v| v.is_finite()))),
    ] {
        if !ok {
            return Err(Error::NonFiniteGradient(name.into()));
        }
    }
    Ok(Gradients {
        loss,
        logits: fwd.logits,
        theta: (wrt != Wrt::Lambda).then_some(theta),
        lambda,
    })
}
