//! Forward and reverse passes of the non-recursive heterogeneous model.
//!
//! ```text
//! Z_t   = dropout(X_t W_t + b_t)                 per node type
//! E_k   = sum_c w_kc * A_kc Z                    per hop (w = softmax(lambda) or one-hot)
//! h_u   = (gelu(l2(Z_u)) + sum_k gelu(l2(E_k,u))) / (K + 1)
//! logit = h W_cls + b_cls
//! ```

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{ArchParams, Architecture, ModelParams};
use crate::error::{Error, Result};
use crate::hin::HinGraph;
use crate::hop::{OperatorBank, SearchSpace};
use crate::seed::{self, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForwardConfig {
    /// Number of hops K.
    pub k: usize,
    pub dropout: f64,
    pub norm_epsilon: f64,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        ForwardConfig {
            k: 3,
            dropout: 0.2,
            norm_epsilon: 1e-12,
        }
    }
}

/// Per-hop aggregation weights.
#[derive(Debug, Clone, PartialEq)]
pub enum Mixing {
    /// One candidate index per hop.
    Discrete(Vec<usize>),
    /// Candidate weights per hop (typically `softmax(lambda)`).
    Weighted(Vec<Vec<f64>>),
}

/// Either a discrete architecture or architecture logits.
#[derive(Debug, Clone, Copy)]
pub enum ArchInput<'a> {
    Discrete(&'a Architecture),
    Lambda(&'a ArchParams),
}

/// Inverted-dropout scale factors for the stacked projected features.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    scale: Array2<f64>,
}

impl DropoutMask {
    /// Each entry is kept with probability `1 - rate` and scaled by
    /// `1 / (1 - rate)`.
    pub fn sample(rows: usize, hidden: usize, rate: f64, seed: u64, step: u64) -> Self {
        let mut rng = seed::rng(seed, Purpose::Dropout, step);
        let keep = 1.0 / (1.0 - rate);
        DropoutMask {
            scale: Array2::from_shape_simple_fn((rows, hidden), || {
                if rate > 0.0 && rng.random::<f64>() < rate {
                    0.0
                } else {
                    keep
                }
            }),
        }
    }

    pub fn scale(&self) -> &Array2<f64> {
        &self.scale
    }
}

/// Evaluation or training pass. Training applies the given dropout mask.
#[derive(Debug, Clone, Copy)]
pub enum Pass<'a> {
    Eval,
    Train(&'a DropoutMask),
}

/// Numerically stable softmax (max subtraction).
pub fn mixture_weights(lambda: &[f64]) -> Result<Vec<f64>> {
    if lambda.is_empty() {
        return Err(Error::NonFiniteInput("empty logit vector".into()));
    }
    if lambda.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput(format!("{lambda:?}")));
    }
    let m = lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = lambda.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    Ok(e.into_iter().map(|v| v / s).collect())
}

/// Chain rule through softmax: `d_lambda = alpha * (d_alpha - <alpha, d_alpha>)`.
pub fn softmax_backward(alpha: &[f64], d_alpha: &[f64]) -> Vec<f64> {
    let dot: f64 = alpha.iter().zip(d_alpha).map(|(a, d)| a * d).sum();
    alpha.iter().zip(d_alpha).map(|(a, d)| a * (d - dot)).collect()
}

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

fn gelu_grad(x: f64) -> f64 {
    let cdf = 0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2));
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    cdf + x * pdf
}

fn check_finite(m: &Array2<f64>, stage: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteActivation(stage.to_string()))
    }
}

/// Row-wise `x / max(|x|, eps)`, returning the normalized rows and norms.
fn l2_rows(x: &Array2<f64>, eps: f64) -> (Array2<f64>, Array1<f64>) {
    let norms: Array1<f64> = x.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    let mut out = x.clone();
    for (mut row, &n) in out.rows_mut().into_iter().zip(&norms) {
        row /= n.max(eps);
    }
    (out, norms)
}

fn l2_rows_backward(normed: &Array2<f64>, norms: &Array1<f64>, d_out: &Array2<f64>, eps: f64) -> Array2<f64> {
    let mut dx = d_out.clone();
    for ((mut row, n), &nrm) in dx.rows_mut().into_iter().zip(normed.rows()).zip(norms) {
        if nrm > eps {
            let proj = n.dot(&row);
            row.scaled_add(-proj, &n);
            row /= nrm;
        } else {
            row /= eps;
        }
    }
    dx
}

/// Activations retained for the reverse pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub logits: Array2<f64>,
    z: Array2<f64>,
    dropout: Option<Array2<f64>>,
    // index 0 is the anchor's own term, index k is hop k
    normed: Vec<Array2<f64>>,
    norms: Vec<Array1<f64>>,
    h: Array2<f64>,
}

/// The model bound to a graph and its operator bank.
#[derive(Debug, Clone, Copy)]
pub struct Model<'a> {
    pub graph: &'a HinGraph,
    pub space: &'a SearchSpace,
    pub bank: &'a OperatorBank,
    pub cfg: ForwardConfig,
}

impl<'a> Model<'a> {
    pub fn new(graph: &'a HinGraph, space: &'a SearchSpace, bank: &'a OperatorBank, cfg: ForwardConfig) -> Result<Self> {
        if cfg.k != space.hops() || bank.hops() != space.hops() {
            return Err(Error::ShapeMismatch(format!(
                "K = {} but search space has {} hops and operator bank {}",
                cfg.k,
                space.hops(),
                bank.hops()
            )));
        }
        if bank.candidate_counts() != space.candidate_counts() {
            return Err(Error::ShapeMismatch("operator bank does not match search space".into()));
        }
        if !(0.0..1.0).contains(&cfg.dropout) {
            return Err(Error::Config(format!("dropout {} not in [0, 1)", cfg.dropout)));
        }
        if !(cfg.norm_epsilon > 0.0) {
            return Err(Error::Config("norm epsilon must be positive".into()));
        }
        Ok(Model { graph, space, bank, cfg })
    }

    pub fn num_anchors(&self) -> usize {
        self.bank.num_anchors()
    }

    pub fn dropout_mask(&self, hidden: usize, seed: u64, step: u64) -> DropoutMask {
        DropoutMask::sample(self.graph.total_nodes(), hidden, self.cfg.dropout, seed, step)
    }

    /// Resolves an architecture or logits into per-hop weights.
    pub fn mixing(&self, input: ArchInput<'_>) -> Result<Mixing> {
        match input {
            ArchInput::Discrete(arch) => Ok(Mixing::Discrete(arch.indices(self.space)?)),
            ArchInput::Lambda(lambda) => {
                if !lambda.matches(self.space) {
                    return Err(Error::ShapeMismatch("architecture logits do not match search space".into()));
                }
                Ok(Mixing::Weighted(
                    lambda
                        .per_hop
                        .iter()
                        .map(|l| mixture_weights(l))
                        .collect::<Result<_>>()?,
                ))
            }
        }
    }

    fn check_mixing(&self, mixing: &Mixing) -> Result<()> {
        let counts = self.bank.candidate_counts();
        let ok = match mixing {
            Mixing::Discrete(idx) => idx.len() == counts.len() && idx.iter().zip(&counts).all(|(i, m)| i < m),
            Mixing::Weighted(w) => w.len() == counts.len() && w.iter().zip(&counts).all(|(v, &m)| v.len() == m),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch("mixing does not match search space".into()))
        }
    }

    fn check_params(&self, params: &ModelParams) -> Result<()> {
        let g = self.graph;
        if params.proj.len() != g.schema().num_node_types() {
            return Err(Error::ShapeMismatch("one projection per node type expected".into()));
        }
        let hidden = params.hidden();
        for (t, p) in params.proj.iter().enumerate() {
            if p.weight.shape() != [g.feature_dim(t), hidden] || p.bias.len() != hidden {
                return Err(Error::ShapeMismatch(format!(
                    "projection of {} has shape {:?}",
                    g.schema().node_types()[t],
                    p.weight.shape()
                )));
            }
        }
        if params.classifier.bias.len() != params.classifier.weight.ncols() {
            return Err(Error::ShapeMismatch("classifier bias width".into()));
        }
        Ok(())
    }

    /// Stacked projected features over global node ids.
    fn project(&self, params: &ModelParams) -> Array2<f64> {
        let g = self.graph;
        let mut z = Array2::zeros((g.total_nodes(), params.hidden()));
        for (t, p) in params.proj.iter().enumerate() {
            let off = g.offset(t);
            let mut block = z.slice_mut(ndarray::s![off..off + g.node_count(t), ..]);
            block.assign(&g.features(t).dot(&p.weight));
            block += &p.bias;
        }
        z
    }

    /// `E_k` for one hop.
    pub fn hop_embedding(&self, k: usize, z: ArrayView2<f64>, mixing: &Mixing) -> Array2<f64> {
        let ops = self.bank.hop(k);
        match mixing {
            Mixing::Discrete(idx) => ops[idx[k - 1]].matmul_dense(z),
            Mixing::Weighted(w) => {
                let mut e = Array2::zeros((self.num_anchors(), z.ncols()));
                for (op, &wc) in ops.iter().zip(&w[k - 1]) {
                    if wc != 0.0 && op.nnz() > 0 {
                        e.scaled_add(wc, &op.matmul_dense(z));
                    }
                }
                e
            }
        }
    }

    pub fn forward(&self, params: &ModelParams, mixing: &Mixing, pass: Pass<'_>) -> Result<ForwardPass> {
        self.check_params(params)?;
        self.check_mixing(mixing)?;
        let eps = self.cfg.norm_epsilon;
        let mut z = self.project(params);
        check_finite(&z, "projection")?;
        let dropout = match pass {
            Pass::Train(mask) if self.cfg.dropout > 0.0 => {
                if mask.scale.raw_dim() != z.raw_dim() {
                    return Err(Error::ShapeMismatch("dropout mask shape".into()));
                }
                z *= &mask.scale;
                Some(mask.scale.clone())
            }
            _ => None,
        };

        let a = self.bank.anchor_type();
        let off = self.graph.offset(a);
        let n_a = self.num_anchors();
        let mut terms = Vec::with_capacity(self.cfg.k + 1);
        terms.push(z.slice(ndarray::s![off..off + n_a, ..]).to_owned());
        for k in 1..=self.cfg.k {
            let e = self.hop_embedding(k, z.view(), mixing);
            check_finite(&e, &format!("hop {k} aggregation"))?;
            terms.push(e);
        }

        let scale = 1.0 / (self.cfg.k as f64 + 1.0);
        let mut h = Array2::zeros((n_a, params.hidden()));
        let mut normed = Vec::with_capacity(terms.len());
        let mut norms = Vec::with_capacity(terms.len());
        for (i, term) in terms.iter().enumerate() {
            let (n, nrm) = l2_rows(term, eps);
            check_finite(&n, &format!("normalization of term {i}"))?;
            Zip::from(&mut h).and(&n).for_each(|hv, &x| *hv += scale * gelu(x));
            normed.push(n);
            norms.push(nrm);
        }
        check_finite(&h, "activation")?;
        let mut logits = h.dot(&params.classifier.weight);
        logits += &params.classifier.bias;
        check_finite(&logits, "logits")?;
        Ok(ForwardPass {
            logits,
            z,
            dropout,
            normed,
            norms,
            h,
        })
    }

    /// Evaluation-mode logits.
    pub fn logits(&self, params: &ModelParams, input: ArchInput<'_>) -> Result<Array2<f64>> {
        let mixing = self.mixing(input)?;
        Ok(self.forward(params, &mixing, Pass::Eval)?.logits)
    }

    /// Reverse pass. Returns parameter gradients and, per hop, the gradient
    /// with respect to every candidate's weight `<A_c Z, dE_k>`. For discrete
    /// mixing the latter is the straight-through estimate at the selection.
    pub fn backward(
        &self,
        params: &ModelParams,
        mixing: &Mixing,
        pass: &ForwardPass,
        d_logits: &Array2<f64>,
    ) -> (ModelParams, Vec<Vec<f64>>) {
        let g = self.graph;
        let eps = self.cfg.norm_epsilon;
        let mut grads = params.zeros_like();
        grads.classifier.weight = pass.h.t().dot(d_logits);
        grads.classifier.bias = d_logits.sum_axis(Axis(0));
        let scale = 1.0 / (self.cfg.k as f64 + 1.0);
        let dh = d_logits.dot(&params.classifier.weight.t()) * scale;

        let mut dz = Array2::<f64>::zeros(pass.z.raw_dim());
        let mut d_weights = Vec::with_capacity(self.cfg.k);
        for (i, (normed, norms)) in pass.normed.iter().zip(&pass.norms).enumerate() {
            let mut dn = dh.clone();
            Zip::from(&mut dn).and(normed).for_each(|d, &x| *d *= gelu_grad(x));
            let dterm = l2_rows_backward(normed, norms, &dn, eps);
            if i == 0 {
                let off = g.offset(self.bank.anchor_type());
                let mut rows = dz.slice_mut(ndarray::s![off..off + self.num_anchors(), ..]);
                rows += &dterm;
                continue;
            }
            let ops = self.bank.hop(i);
            let mut dw = vec![0.0; ops.len()];
            for (c, op) in ops.iter().enumerate() {
                if op.nnz() == 0 {
                    continue;
                }
                let back = op.t_matmul_dense(dterm.view());
                dw[c] = (&back * &pass.z).sum();
                let wc = match mixing {
                    Mixing::Discrete(idx) => f64::from(u8::from(idx[i - 1] == c)),
                    Mixing::Weighted(w) => w[i - 1][c],
                };
                if wc != 0.0 {
                    dz.scaled_add(wc, &back);
                }
            }
            d_weights.push(dw);
        }

        if let Some(scale) = &pass.dropout {
            dz *= scale;
        }
        for (t, gp) in grads.proj.iter_mut().enumerate() {
            let off = g.offset(t);
            let dy = dz.slice(ndarray::s![off..off + g.node_count(t), ..]);
            gp.weight = g.features(t).t().dot(&dy);
            gp.bias = dy.sum_axis(Axis(0));
        }
        (grads, d_weights)
    }
}
