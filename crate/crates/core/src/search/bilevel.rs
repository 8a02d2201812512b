//! Alternating bilevel updates over flat parameter vectors.
//!
//! `theta` is updated by gradient descent on the training loss. `lambda`
//! descends the validation loss, either directly (first order) or through a
//! one-step unrolled inner update:
//!
//! ```text
//! w'   = theta - mu * grad_theta L_train(theta, lambda)
//! g    = grad_lambda L_valid(w', lambda) - mu * H
//! H   ~= (grad_lambda L_train(theta+, lambda) - grad_lambda L_train(theta-, lambda)) / (2 eps)
//! theta+- = theta +- eps * grad_w' L_valid(w', lambda),  eps = fd_epsilon / |grad_w' L_valid|
//! ```

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrads {
    pub loss: f64,
    pub theta: Vec<f64>,
    pub lambda: Vec<f64>,
}

/// Training and validation objectives of a bilevel problem.
pub trait BilevelObjective {
    fn train(&self, theta: &[f64], lambda: &[f64]) -> Result<LossGrads>;
    fn valid(&self, theta: &[f64], lambda: &[f64]) -> Result<LossGrads>;
}

fn finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteGradient(what.to_string()))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `theta - mu * grad_theta L_train(theta, lambda)`, with the training loss
/// at `theta`.
pub fn update_theta<O: BilevelObjective + ?Sized>(obj: &O, theta: &[f64], lambda: &[f64], mu: f64) -> Result<(Vec<f64>, f64)> {
    let g = obj.train(theta, lambda)?;
    finite(&g.theta, "theta")?;
    Ok((theta.iter().zip(&g.theta).map(|(t, d)| t - mu * d).collect(), g.loss))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaStep {
    pub unrolled: bool,
    /// Inner learning rate `mu` used by the unrolled step.
    pub mu_theta: f64,
    pub fd_epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGradient {
    pub grad: Vec<f64>,
    /// Validation loss at the point the direct term was evaluated.
    pub valid_loss: f64,
    /// The finite-difference mixed term `H`, when computed.
    pub second_order: Option<Vec<f64>>,
}

pub fn lambda_gradient<O: BilevelObjective + ?Sized>(obj: &O, theta: &[f64], lambda: &[f64], step: &LambdaStep) -> Result<LambdaGradient> {
    if !step.unrolled {
        let v = obj.valid(theta, lambda)?;
        finite(&v.lambda, "lambda")?;
        return Ok(LambdaGradient {
            grad: v.lambda,
            valid_loss: v.loss,
            second_order: None,
        });
    }
    if !(step.fd_epsilon > 0.0) {
        return Err(Error::Config("fd_epsilon must be positive".into()));
    }
    let (w, _) = update_theta(obj, theta, lambda, step.mu_theta)?;
    let v = obj.valid(&w, lambda)?;
    finite(&v.lambda, "lambda")?;
    finite(&v.theta, "theta")?;
    let n = norm(&v.theta);
    if n == 0.0 {
        log::warn!("validation gradient vanished; skipping the second-order term");
        return Ok(LambdaGradient {
            grad: v.lambda,
            valid_loss: v.loss,
            second_order: None,
        });
    }
    let eps = step.fd_epsilon / n;
    let plus: Vec<f64> = theta.iter().zip(&v.theta).map(|(t, d)| t + eps * d).collect();
    let minus: Vec<f64> = theta.iter().zip(&v.theta).map(|(t, d)| t - eps * d).collect();
    let gp = obj.train(&plus, lambda)?;
    let gm = obj.train(&minus, lambda)?;
    let h: Vec<f64> = gp.lambda.iter().zip(&gm.lambda).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
    finite(&h, "second-order term")?;
    let grad = v.lambda.iter().zip(&h).map(|(d, s)| d - step.mu_theta * s).collect();
    Ok(LambdaGradient {
        grad,
        valid_loss: v.loss,
        second_order: Some(h),
    })
}

/// One plain gradient step on lambda.
pub fn update_lambda<O: BilevelObjective + ?Sized>(
    obj: &O,
    theta: &[f64],
    lambda: &[f64],
    step: &LambdaStep,
    lr_lambda: f64,
) -> Result<Vec<f64>> {
    let g = lambda_gradient(obj, theta, lambda, step)?;
    Ok(lambda.iter().zip(&g.grad).map(|(l, d)| l - lr_lambda * d).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// L_train = (t - 3)^2 / 2, no lambda dependence.
    struct Bowl;

    impl BilevelObjective for Bowl {
        fn train(&self, t: &[f64], _: &[f64]) -> Result<LossGrads> {
            Ok(LossGrads {
                loss: 0.5 * (t[0] - 3.0).powi(2),
                theta: vec![t[0] - 3.0],
                lambda: vec![0.0],
            })
        }
        fn valid(&self, t: &[f64], l: &[f64]) -> Result<LossGrads> {
            self.train(t, l)
        }
    }

    #[test]
    fn theta_step_closed_form() {
        let (t, loss) = update_theta(&Bowl, &[1.0], &[0.0], 0.25).unwrap();
        assert_eq!(t, vec![1.0 - 0.25 * (1.0 - 3.0)]);
        assert_eq!(loss, 2.0);
        let (same, _) = update_theta(&Bowl, &[1.0], &[0.0], 0.0).unwrap();
        assert_eq!(same, vec![1.0]);
    }

    #[test]
    fn first_order_ignores_mu() {
        let step = |mu| LambdaStep {
            unrolled: false,
            mu_theta: mu,
            fd_epsilon: 0.01,
        };
        let a = lambda_gradient(&Bowl, &[1.0], &[0.0], &step(0.0)).unwrap();
        let b = lambda_gradient(&Bowl, &[1.0], &[0.0], &step(5.0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_validation_gradient_skips_second_order() {
        let step = LambdaStep {
            unrolled: true,
            mu_theta: 0.0,
            fd_epsilon: 0.01,
        };
        let g = lambda_gradient(&Bowl, &[3.0], &[0.0], &step).unwrap();
        assert!(g.second_order.is_none());
    }
}
