//! Layers with explicit forward caches and backward passes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::params::{BufferId, ModelParams, ParamId};
use super::tensor::Tensor2;
use crate::error::{Error, Result};

/// Forward-pass mode. Training mode carries the seed that fixes every
/// dropout mask of the pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train { seed: u64 },
    Eval,
}

impl Mode {
    pub fn is_train(self) -> bool {
        matches!(self, Mode::Train { .. })
    }
}

/// Affine map `x W + b` with `W: in x out` and `b: 1 x out`.
#[derive(Debug, Clone, Copy)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    /// Glorot-uniform weights, zero bias.
    pub fn new(params: &mut ModelParams, name: &str, in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        let weight = params.add_glorot(&format!("{name}.weight"), in_dim, out_dim, rng);
        let bias = params.add(&format!("{name}.bias"), Tensor2::zeros(1, out_dim));
        Linear {
            weight,
            bias,
            in_dim,
            out_dim,
        }
    }

    pub fn forward(&self, p: &ModelParams, x: &Tensor2) -> Result<Tensor2> {
        linear(x, p.value(self.weight), p.value(self.bias))
    }

    /// `x W` without the bias, for layers that insert propagation between
    /// the product and the bias.
    pub fn forward_no_bias(&self, p: &ModelParams, x: &Tensor2) -> Result<Tensor2> {
        x.matmul(p.value(self.weight))
    }

    pub fn add_bias(&self, p: &ModelParams, z: &mut Tensor2) -> Result<()> {
        add_row_bias(z, p.value(self.bias))
    }

    /// Accumulates parameter gradients and returns `∂L/∂x`.
    pub fn backward(&self, p: &mut ModelParams, x: &Tensor2, grad_out: &Tensor2) -> Result<Tensor2> {
        self.backward_bias(p, grad_out)?;
        self.backward_no_bias(p, x, grad_out)
    }

    pub fn backward_bias(&self, p: &mut ModelParams, grad_out: &Tensor2) -> Result<()> {
        let db = Tensor2::from_vec(1, grad_out.cols(), column_sums(grad_out))?;
        p.accumulate(self.bias, &db)
    }

    pub fn backward_no_bias(&self, p: &mut ModelParams, x: &Tensor2, grad_out: &Tensor2) -> Result<Tensor2> {
        let dw = x.matmul_tn(grad_out)?;
        p.accumulate(self.weight, &dw)?;
        grad_out.matmul_nt(p.value(self.weight))
    }
}

/// `x W + b`, `b` broadcast over rows.
pub fn linear(x: &Tensor2, w: &Tensor2, b: &Tensor2) -> Result<Tensor2> {
    let mut z = x.matmul(w)?;
    add_row_bias(&mut z, b)?;
    Ok(z)
}

/// Adds the `1 x cols` row `b` to every row of `z`.
pub fn add_row_bias(z: &mut Tensor2, b: &Tensor2) -> Result<()> {
    if b.rows() != 1 || b.cols() != z.cols() {
        return Err(Error::Shape(format!("bias {:?} for output {:?}", b.shape(), z.shape())));
    }
    let bias = b.row(0).to_vec();
    for i in 0..z.rows() {
        for (o, bb) in z.row_mut(i).iter_mut().zip(&bias) {
            *o += bb;
        }
    }
    Ok(())
}

fn column_sums(t: &Tensor2) -> Vec<f64> {
    let mut s = vec![0.0; t.cols()];
    for i in 0..t.rows() {
        for (a, b) in s.iter_mut().zip(t.row(i)) {
            *a += b;
        }
    }
    s
}

pub fn relu(x: &Tensor2) -> Tensor2 {
    x.map(|v| v.max(0.0))
}

/// Gradient through ReLU given its input. The subgradient at 0 is 0.
pub fn relu_backward(input: &Tensor2, grad_out: &Tensor2) -> Result<Tensor2> {
    if input.shape() != grad_out.shape() {
        return Err(Error::Shape("relu backward".into()));
    }
    let data = input
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
        .collect();
    Tensor2::from_vec(input.rows(), input.cols(), data)
}

/// Inverted dropout: in training, zero each entry with probability `p` and
/// scale survivors by `1 / (1 - p)`; identity in evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Dropout {
    pub p: f64,
    /// Distinguishes the masks of different dropout sites within one pass.
    pub stream: u64,
}

impl Dropout {
    pub fn new(p: f64, stream: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Config(format!("dropout rate {p} outside [0, 1)")));
        }
        Ok(Dropout { p, stream })
    }

    /// Returns the output and the applied mask (already scaled), if any.
    pub fn forward(&self, x: &Tensor2, mode: Mode) -> (Tensor2, Option<Tensor2>) {
        match mode {
            Mode::Train { seed } if self.p > 0.0 => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(self.stream);
                let keep = 1.0 / (1.0 - self.p);
                let mask = Tensor2::from_fn(x.rows(), x.cols(), |_, _| {
                    if rng.random::<f64>() < self.p {
                        0.0
                    } else {
                        keep
                    }
                });
                let out = Tensor2::from_vec(
                    x.rows(),
                    x.cols(),
                    x.data().iter().zip(mask.data()).map(|(a, m)| a * m).collect(),
                )
                .expect("same shape");
                (out, Some(mask))
            }
            _ => (x.clone(), None),
        }
    }

    pub fn backward(grad_out: &Tensor2, mask: Option<&Tensor2>) -> Tensor2 {
        match mask {
            Some(m) => Tensor2::from_vec(
                grad_out.rows(),
                grad_out.cols(),
                grad_out.data().iter().zip(m.data()).map(|(g, k)| g * k).collect(),
            )
            .expect("same shape"),
            None => grad_out.clone(),
        }
    }
}

/// Per-feature batch normalisation over the row dimension.
#[derive(Debug, Clone, Copy)]
pub struct BatchNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
    pub running_mean: BufferId,
    pub running_var: BufferId,
    pub dim: usize,
    pub momentum: f64,
    pub eps: f64,
}

/// Values kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    x_hat: Tensor2,
    inv_std: Vec<f64>,
    batch_stats: bool,
}

impl BatchNorm {
    pub fn new(params: &mut ModelParams, name: &str, dim: usize) -> Self {
        BatchNorm {
            gamma: params.add(&format!("{name}.gamma"), Tensor2::filled(1, dim, 1.0)),
            beta: params.add(&format!("{name}.beta"), Tensor2::zeros(1, dim)),
            running_mean: params.add_buffer(&format!("{name}.running_mean"), vec![0.0; dim]),
            running_var: params.add_buffer(&format!("{name}.running_var"), vec![1.0; dim]),
            dim,
            momentum: 0.1,
            eps: 1e-5,
        }
    }

    fn check(&self, x: &Tensor2) -> Result<()> {
        if x.cols() != self.dim {
            return Err(Error::Shape(format!("batch norm over {} features, input {:?}", self.dim, x.shape())));
        }
        Ok(())
    }

    /// Batch statistics in training mode (updating the running estimates),
    /// running statistics otherwise.
    pub fn forward(&self, p: &mut ModelParams, x: &Tensor2, mode: Mode) -> Result<(Tensor2, BatchNormCache)> {
        if mode.is_train() {
            self.forward_train(p, x)
        } else {
            self.check(x)?;
            let mean = p.buffer(self.running_mean).to_vec();
            let inv_std: Vec<f64> = p
                .buffer(self.running_var)
                .iter()
                .map(|v| 1.0 / (v + self.eps).sqrt())
                .collect();
            let x_hat = Tensor2::from_fn(x.rows(), self.dim, |i, j| (x.get(i, j) - mean[j]) * inv_std[j]);
            let out = self.affine(p, &x_hat);
            Ok((
                out,
                BatchNormCache {
                    x_hat,
                    inv_std,
                    batch_stats: false,
                },
            ))
        }
    }

    /// Normalises with batch statistics and updates the running estimates.
    ///
    /// Batch statistics are reduced in content order, so they do not depend
    /// on the order of the rows.
    pub fn forward_train(&self, p: &mut ModelParams, x: &Tensor2) -> Result<(Tensor2, BatchNormCache)> {
        self.check(x)?;
        let n = x.rows();
        if n == 0 {
            return Err(Error::Shape("batch norm over an empty batch".into()));
        }
        let nf = n as f64;
        let mean: Vec<f64> = x.column_sums_invariant().into_iter().map(|s| s / nf).collect();
        let centered = Tensor2::from_fn(n, self.dim, |i, j| x.get(i, j) - mean[j]);
        let var: Vec<f64> = centered
            .map(|v| v * v)
            .column_sums_invariant()
            .into_iter()
            .map(|s| s / nf)
            .collect();
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();
        let x_hat = Tensor2::from_fn(n, self.dim, |i, j| centered.get(i, j) * inv_std[j]);
        let out = self.affine(p, &x_hat);

        let unbiased = if n > 1 { nf / (nf - 1.0) } else { 1.0 };
        let mom = self.momentum;
        for (r, m) in p.buffer_mut(self.running_mean).iter_mut().zip(&mean) {
            *r = (1.0 - mom) * *r + mom * m;
        }
        for (r, v) in p.buffer_mut(self.running_var).iter_mut().zip(&var) {
            *r = (1.0 - mom) * *r + mom * v * unbiased;
        }
        Ok((
            out,
            BatchNormCache {
                x_hat,
                inv_std,
                batch_stats: true,
            },
        ))
    }

    /// Affine map using the running statistics.
    pub fn forward_eval(&self, p: &ModelParams, x: &Tensor2) -> Result<Tensor2> {
        self.check(x)?;
        let mean = p.buffer(self.running_mean);
        let var = p.buffer(self.running_var);
        let x_hat = Tensor2::from_fn(x.rows(), self.dim, |i, j| {
            (x.get(i, j) - mean[j]) / (var[j] + self.eps).sqrt()
        });
        Ok(self.affine(p, &x_hat))
    }

    fn affine(&self, p: &ModelParams, x_hat: &Tensor2) -> Tensor2 {
        let g = p.value(self.gamma).row(0).to_vec();
        let b = p.value(self.beta).row(0).to_vec();
        Tensor2::from_fn(x_hat.rows(), self.dim, |i, j| x_hat.get(i, j) * g[j] + b[j])
    }

    pub fn backward(&self, p: &mut ModelParams, cache: &BatchNormCache, grad_out: &Tensor2) -> Result<Tensor2> {
        let n = grad_out.rows();
        let nf = n as f64;
        let gamma = p.value(self.gamma).row(0).to_vec();
        let mut dgamma = vec![0.0; self.dim];
        let mut dbeta = vec![0.0; self.dim];
        let mut sum_dxhat = vec![0.0; self.dim];
        let mut sum_dxhat_xhat = vec![0.0; self.dim];
        for i in 0..n {
            for j in 0..self.dim {
                let g = grad_out.get(i, j);
                let xh = cache.x_hat.get(i, j);
                dgamma[j] += g * xh;
                dbeta[j] += g;
                let dxh = g * gamma[j];
                sum_dxhat[j] += dxh;
                sum_dxhat_xhat[j] += dxh * xh;
            }
        }
        p.accumulate(self.gamma, &Tensor2::from_vec(1, self.dim, dgamma)?)?;
        p.accumulate(self.beta, &Tensor2::from_vec(1, self.dim, dbeta)?)?;
        Ok(Tensor2::from_fn(n, self.dim, |i, j| {
            let dxh = grad_out.get(i, j) * gamma[j];
            if cache.batch_stats {
                cache.inv_std[j] / nf * (nf * dxh - sum_dxhat[j] - cache.x_hat.get(i, j) * sum_dxhat_xhat[j])
            } else {
                dxh * cache.inv_std[j]
            }
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(5)
    }

    #[test]
    fn linear_examples() {
        let x = Tensor2::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let w = Tensor2::column(&[1.0, 1.0]);
        let b = Tensor2::from_rows(&[vec![3.0]]).unwrap();
        assert_eq!(linear(&x, &w, &b).unwrap().data(), &[6.0]);
        let x = Tensor2::from_rows(&[vec![1.5, -2.0], vec![0.0, 4.0]]).unwrap();
        let out = linear(&x, &Tensor2::identity(2), &Tensor2::zeros(1, 2)).unwrap();
        assert_eq!(out, x);
        assert!(linear(&x, &Tensor2::identity(3), &Tensor2::zeros(1, 3)).is_err());
        assert!(linear(&x, &Tensor2::identity(2), &Tensor2::zeros(1, 3)).is_err());
    }

    #[test]
    fn relu_example() {
        let x = Tensor2::from_rows(&[vec![-1.0, 2.0]]).unwrap();
        assert_eq!(relu(&x).data(), &[0.0, 2.0]);
    }

    #[test]
    fn dropout_zero_rate_is_identity() {
        let d = Dropout::new(0.0, 0).unwrap();
        let x = Tensor2::from_rows(&[vec![1.0, -2.0, 3.0]]).unwrap();
        assert_eq!(d.forward(&x, Mode::Train { seed: 1 }).0, x);
        assert_eq!(d.forward(&x, Mode::Eval).0, x);
    }

    #[test]
    fn dropout_rejects_bad_rate() {
        assert!(Dropout::new(1.0, 0).is_err());
        assert!(Dropout::new(-0.1, 0).is_err());
    }

    #[test]
    fn dropout_masks_are_seeded_per_stream() {
        let x = Tensor2::filled(20, 20, 1.0);
        let a = Dropout::new(0.5, 0).unwrap();
        let b = Dropout::new(0.5, 1).unwrap();
        let m = Mode::Train { seed: 3 };
        assert_eq!(a.forward(&x, m).0, a.forward(&x, m).0);
        assert_ne!(a.forward(&x, m).0, b.forward(&x, m).0);
    }

    #[test]
    fn dropout_preserves_expectation() {
        let d = Dropout::new(0.1, 0).unwrap();
        let x = Tensor2::filled(1, 1, 2.0);
        let trials = 100_000;
        let mean: f64 = (0..trials)
            .map(|s| d.forward(&x, Mode::Train { seed: s }).0.get(0, 0))
            .sum::<f64>()
            / trials as f64;
        assert!((mean - 2.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn batch_norm_training_standardises() {
        let mut p = ModelParams::new();
        let bn = BatchNorm::new(&mut p, "bn", 3);
        let mut r = rng();
        // Spreads far above eps, so the normalised variance is 1 to within 1e-6.
        let x = Tensor2::from_fn(50, 3, |_, j| r.random_range(-1.0..1.0) * 20.0 * (j + 1) as f64 + 5.0);
        let (y, _) = bn.forward_train(&mut p, &x).unwrap();
        for j in 0..3 {
            let col = y.col_values(j);
            let mean = col.iter().sum::<f64>() / 50.0;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 50.0;
            assert!(mean.abs() < 1e-9);
            assert!((var - 1.0).abs() < 1e-6, "{var}");
        }
        assert!(p.buffer(bn.running_var).iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn batch_norm_eval_is_row_independent() {
        let mut p = ModelParams::new();
        let bn = BatchNorm::new(&mut p, "bn", 2);
        let mut r = rng();
        let x = Tensor2::from_fn(10, 2, |_, _| r.random_range(-3.0..3.0));
        bn.forward_train(&mut p, &x).unwrap();
        let full = bn.forward_eval(&p, &x).unwrap();
        let single = bn.forward_eval(&p, &x.select_rows(&[4])).unwrap();
        assert_eq!(full.row(4), single.row(0));
    }
}
