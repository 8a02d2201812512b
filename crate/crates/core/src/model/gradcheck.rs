//! Central finite-difference verification of the analytic gradients.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::grads::{grads, Wrt};
use super::loss::loss;
use super::net::{ArchInput, ForwardConfig, Model, Pass};
use super::params::{init_params, ArchParams, ModelParams};
use crate::error::Result;
use crate::exec::Exec;
use crate::hin::{generate_synthetic, SyntheticSpec};
use crate::hop::{build_search_space, neighborhoods, NeighborhoodMode, OperatorBank};
use crate::seed::{self, Purpose};

#[derive(Debug, Clone, Serialize)]
pub struct CoordinateError {
    /// `theta[i]` or `lambda[i]` in flat order.
    pub coordinate: String,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub coordinates: usize,
    pub failures: Vec<CoordinateError>,
    pub passed: bool,
}

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-8)
}

/// Compares analytic gradients of the masked loss against central
/// differences with step `h`, coordinate by coordinate, for every theta and
/// lambda entry.
#[allow(clippy::too_many_arguments)]
pub fn grad_check(
    model: &Model<'_>,
    params: &ModelParams,
    lambda: &ArchParams,
    labels: &[usize],
    mask: &[usize],
    pass: Pass<'_>,
    h: f64,
    tol: f64,
) -> Result<GradCheckReport> {
    let g = grads(model, params, ArchInput::Lambda(lambda), labels, mask, pass, Wrt::Both)?;
    let analytic_theta = g.theta.expect("requested").to_flat();
    let analytic_lambda = g.lambda.expect("requested").to_flat();

    let eval = |p: &ModelParams, l: &ArchParams| -> Result<f64> {
        let mixing = model.mixing(ArchInput::Lambda(l))?;
        let fwd = model.forward(p, &mixing, pass)?;
        loss(&fwd.logits, labels, mask)
    };

    let mut max_rel_err: f64 = 0.0;
    let mut failures = Vec::new();
    let mut record = |name: String, a: f64, n: f64| {
        let r = rel_err(a, n);
        max_rel_err = max_rel_err.max(r);
        if !(r < tol) {
            failures.push(CoordinateError {
                coordinate: name,
                analytic: a,
                numeric: n,
                rel_err: r,
            });
        }
    };

    let theta0 = params.to_flat();
    let mut probe = params.clone();
    for (i, &a) in analytic_theta.iter().enumerate() {
        let mut t = theta0.clone();
        t[i] = theta0[i] + h;
        probe.set_flat(&t);
        let up = eval(&probe, lambda)?;
        t[i] = theta0[i] - h;
        probe.set_flat(&t);
        let down = eval(&probe, lambda)?;
        record(format!("theta[{i}]"), a, (up - down) / (2.0 * h));
    }
    let lam0 = lambda.to_flat();
    let mut lprobe = lambda.clone();
    for (i, &a) in analytic_lambda.iter().enumerate() {
        let mut l = lam0.clone();
        l[i] = lam0[i] + h;
        lprobe.set_flat(&l);
        let up = eval(params, &lprobe)?;
        l[i] = lam0[i] - h;
        lprobe.set_flat(&l);
        let down = eval(params, &lprobe)?;
        record(format!("lambda[{i}]"), a, (up - down) / (2.0 * h));
    }
    let coordinates = analytic_theta.len() + analytic_lambda.len();
    let passed = failures.is_empty();
    Ok(GradCheckReport {
        max_rel_err,
        coordinates,
        failures,
        passed,
    })
}

/// Builds a generated instance (exact neighborhoods, hidden width 4, random
/// logits, every anchor in the mask) and runs [`grad_check`] on it.
pub fn grad_check_synthetic(
    spec: &SyntheticSpec,
    cfg: ForwardConfig,
    seed: u64,
    h: f64,
    tol: f64,
    with_dropout: bool,
) -> Result<GradCheckReport> {
    let (graph, task, _) = generate_synthetic(spec)?;
    let space = build_search_space(graph.schema(), task.anchor_type(), cfg.k)?;
    let nbs = neighborhoods(&graph, task.anchor_type(), cfg.k, NeighborhoodMode::Exact, Exec::Sequential)?;
    let bank = OperatorBank::build(&graph, &space, &nbs, Exec::Sequential)?;
    let model = Model::new(&graph, &space, &bank, cfg)?;
    let hidden = 4;
    let params = init_params(&graph, &task, hidden, seed)?;
    let mut lambda = ArchParams::zeros(&space);
    let mut rng = seed::rng(seed, Purpose::Init, 1);
    let flat: Vec<f64> = (0..lambda.len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    lambda.set_flat(&flat);
    let mask: Vec<usize> = (0..task.labels().len()).collect();
    let dropout = model.dropout_mask(hidden, seed, 0);
    let pass = if with_dropout { Pass::Train(&dropout) } else { Pass::Eval };
    grad_check(&model, &params, &lambda, task.labels(), &mask, pass, h, tol)
}
