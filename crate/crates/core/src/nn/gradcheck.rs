//! Central finite-difference validation of analytic gradients.

use super::params::ModelParams;
use crate::error::Result;

/// A scalar function of a parameter set that can also report its gradient.
pub trait Differentiable {
    fn params(&self) -> &ModelParams;
    fn params_mut(&mut self) -> &mut ModelParams;
    /// Loss at the current parameters, without touching gradients.
    fn loss(&mut self) -> Result<f64>;
    /// Loss at the current parameters; overwrites the gradients.
    fn loss_and_grad(&mut self) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    pub step: f64,
    pub tol: f64,
    /// Lower bound on the relative-error denominator, so near-zero
    /// gradients are compared absolutely.
    pub floor: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            step: 1e-6,
            tol: 1e-4,
            floor: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    /// Parameter name and element index with the largest error.
    pub worst: Option<(String, usize)>,
    pub passed: bool,
}

/// Compares every analytic partial derivative with `(f(x+h) - f(x-h)) / 2h`.
pub fn grad_check<M: Differentiable>(model: &mut M, opts: &GradCheckOptions) -> Result<GradCheckReport> {
    model.params_mut().zero_grad();
    model.loss_and_grad()?;
    let analytic: Vec<Vec<f64>> = model.params().params().iter().map(|p| p.grad.data().to_vec()).collect();
    let mut max_rel = 0.0f64;
    let mut worst = None;
    let mut checked = 0;
    for (pi, grads) in analytic.iter().enumerate() {
        for (k, &a) in grads.iter().enumerate() {
            let orig = model.params().params()[pi].value.data()[k];
            model.params_mut().params_mut()[pi].value.data_mut()[k] = orig + opts.step;
            let up = model.loss()?;
            model.params_mut().params_mut()[pi].value.data_mut()[k] = orig - opts.step;
            let down = model.loss()?;
            model.params_mut().params_mut()[pi].value.data_mut()[k] = orig;
            let fd = (up - down) / (2.0 * opts.step);
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(opts.floor);
            checked += 1;
            if rel > max_rel || rel.is_nan() {
                max_rel = if rel.is_nan() { f64::INFINITY } else { rel };
                worst = Some((model.params().params()[pi].name.clone(), k));
            }
        }
    }
    Ok(GradCheckReport {
        checked,
        max_rel_error: max_rel,
        worst,
        passed: max_rel < opts.tol,
    })
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::nn::{mae_loss, Linear, Tensor2};

    struct LinearMae {
        params: ModelParams,
        layer: Linear,
        x: Tensor2,
        y: Vec<f64>,
        corrupt: bool,
    }

    impl LinearMae {
        fn new(corrupt: bool) -> Self {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let mut params = ModelParams::new();
            let layer = Linear::new(&mut params, "lin", 4, 1, &mut rng);
            params.value_mut(layer.bias).set(0, 0, 0.3);
            let x = Tensor2::from_fn(15, 4, |_, _| rng.random_range(-1.0..1.0));
            let y = (0..15).map(|_| rng.random_range(-2.0..2.0)).collect();
            LinearMae {
                params,
                layer,
                x,
                y,
                corrupt,
            }
        }
    }

    impl Differentiable for LinearMae {
        fn params(&self) -> &ModelParams {
            &self.params
        }
        fn params_mut(&mut self) -> &mut ModelParams {
            &mut self.params
        }
        fn loss(&mut self) -> Result<f64> {
            let out = self.layer.forward(&self.params, &self.x)?;
            Ok(mae_loss(out.data(), &self.y)?.0)
        }
        fn loss_and_grad(&mut self) -> Result<f64> {
            let out = self.layer.forward(&self.params, &self.x)?;
            let (l, g) = mae_loss(out.data(), &self.y)?;
            self.params.zero_grad();
            self.layer
                .backward(&mut self.params, &self.x, &Tensor2::column(&g))?;
            if self.corrupt {
                let w = self.layer.weight;
                let v = self.params.grad(w).get(2, 0);
                self.params.grad_mut(w).set(2, 0, v * 1.5 + 0.1);
            }
            Ok(l)
        }
    }

    #[test]
    fn linear_mae_passes() {
        let r = grad_check(&mut LinearMae::new(false), &GradCheckOptions::default()).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.checked, 5);
    }

    #[test]
    fn corrupted_gradient_fails() {
        let r = grad_check(&mut LinearMae::new(true), &GradCheckOptions::default()).unwrap();
        assert!(!r.passed);
        assert_eq!(r.worst, Some(("lin.weight".to_string(), 2)));
    }
}
