use ndarray::Array2;

use crate::error::{Error, Result};

/// Mean softmax cross-entropy over the rows in `mask`, with the gradient with
/// respect to the full logits matrix (zero outside the mask).
pub fn cross_entropy(logits: &Array2<f64>, labels: &[usize], mask: &[usize]) -> Result<(f64, Array2<f64>)> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let inv = 1.0 / mask.len() as f64;
    let mut grad = Array2::zeros(logits.raw_dim());
    let mut total = 0.0;
    for &r in mask {
        let row = logits.row(r);
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        total += lse - row[labels[r]];
        for (c, g) in grad.row_mut(r).iter_mut().enumerate() {
            *g = inv * ((row[c] - lse).exp() - f64::from(u8::from(c == labels[r])));
        }
    }
    let loss = total * inv;
    if !loss.is_finite() {
        return Err(Error::NonFiniteActivation("loss".into()));
    }
    Ok((loss, grad))
}

pub fn loss(logits: &Array2<f64>, labels: &[usize], mask: &[usize]) -> Result<f64> {
    cross_entropy(logits, labels, mask).map(|(l, _)| l)
}
