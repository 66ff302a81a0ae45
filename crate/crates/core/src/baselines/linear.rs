use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binio::{self, Reader, Writer};
use crate::error::{Error, Result};
use crate::nn::{dot, Tensor2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    L1(f64),
    L2(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub penalty: Penalty,
}

const MAGIC: &[u8; 4] = b"HXLM";
const VERSION: u32 = 1;

impl LinearModel {
    pub fn predict(&self, x: &Tensor2) -> Result<Vec<f64>> {
        if x.cols() != self.weights.len() {
            return Err(Error::Shape(format!("{} features for {} weights", x.cols(), self.weights.len())));
        }
        Ok((0..x.rows()).map(|i| dot(x.row(i), &self.weights) + self.intercept).collect())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(MAGIC, VERSION);
        let (kind, lambda) = match self.penalty {
            Penalty::L1(l) => (1, l),
            Penalty::L2(l) => (2, l),
        };
        w.u32(kind);
        w.f64(lambda);
        w.f64(self.intercept);
        w.f64s(&self.weights);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<LinearModel> {
        let (mut r, version) = Reader::open(bytes, MAGIC, "linear model")?;
        binio::expect_version(version, VERSION, "linear model")?;
        let kind = r.u32()?;
        let lambda = r.f64()?;
        let penalty = match kind {
            1 => Penalty::L1(lambda),
            2 => Penalty::L2(lambda),
            k => return Err(Error::format("linear model", format!("unknown penalty tag {k}"))),
        };
        let intercept = r.f64()?;
        let weights = r.f64s()?;
        r.finish()?;
        Ok(LinearModel {
            weights,
            intercept,
            penalty,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<LinearModel> {
        LinearModel::from_bytes(&binio::read_file(path)?)
    }
}

fn check_xy(x: &Tensor2, y: &[f64]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::Shape(format!("{} rows, {} targets", x.rows(), y.len())));
    }
    if y.is_empty() {
        return Err(Error::Shape("no training rows".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LassoOptions {
    pub lambda: f64,
    /// Converged once no coordinate moves by more than this in a sweep.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions {
            lambda: 1.0,
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub model: LinearModel,
    pub converged: bool,
    pub sweeps: usize,
    /// Objective after each sweep.
    pub objective: Vec<f64>,
}

fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// `(1/2n)‖y - Xw - b‖² + λ‖w‖₁`.
pub fn lasso_objective(x: &Tensor2, y: &[f64], w: &[f64], b: f64, lambda: f64) -> f64 {
    let n = y.len() as f64;
    let rss: f64 = (0..x.rows()).map(|i| (y[i] - dot(x.row(i), w) - b).powi(2)).sum();
    rss / (2.0 * n) + lambda * w.iter().map(|v| v.abs()).sum::<f64>()
}

/// Cyclic coordinate descent. Each sweep refits the (unpenalised)
/// intercept exactly, then every weight in column order.
pub fn lasso_fit(x: &Tensor2, y: &[f64], opts: &LassoOptions) -> Result<LassoFit> {
    check_xy(x, y)?;
    if !(opts.lambda >= 0.0) {
        return Err(Error::Config(format!("lambda {} must be non-negative", opts.lambda)));
    }
    let (n, d) = x.shape();
    let nf = n as f64;
    let columns: Vec<Vec<f64>> = (0..d).map(|j| x.col_values(j)).collect();
    let sq_norm: Vec<f64> = columns.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>() / nf).collect();
    let mut w = vec![0.0; d];
    let mut xw = vec![0.0; n];
    let mut b = 0.0;
    let mut objective = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < opts.max_iter {
        sweeps += 1;
        let new_b = y.iter().zip(&xw).map(|(yi, p)| yi - p).sum::<f64>() / nf;
        let mut max_change = (new_b - b).abs();
        b = new_b;
        for j in 0..d {
            if sq_norm[j] == 0.0 {
                continue;
            }
            let col = &columns[j];
            let old = w[j];
            let rho = (0..n).map(|i| col[i] * (y[i] - xw[i] - b + col[i] * old)).sum::<f64>() / nf;
            let new = soft_threshold(rho, opts.lambda) / sq_norm[j];
            if new != old {
                let delta = new - old;
                for i in 0..n {
                    xw[i] += col[i] * delta;
                }
                w[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        objective.push(lasso_objective(x, y, &w, b, opts.lambda));
        if max_change < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(LassoFit {
        model: LinearModel {
            weights: w,
            intercept: b,
            penalty: Penalty::L1(opts.lambda),
        },
        converged,
        sweeps,
        objective,
    })
}

/// Smallest λ at which every weight is zero: `max_j |x_jᵀ(y - ȳ)| / n`.
pub fn lasso_lambda_max(x: &Tensor2, y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    (0..x.cols())
        .map(|j| (0..x.rows()).map(|i| x.get(i, j) * (y[i] - mean)).sum::<f64>().abs() / n)
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgdOptions {
    pub l2: f64,
    pub lr0: f64,
    /// Exponent of the inverse-scaling schedule `lr0 / t^power_t`.
    pub power_t: f64,
    pub epochs: usize,
}

impl Default for SgdOptions {
    fn default() -> Self {
        SgdOptions {
            l2: 1e-4,
            lr0: 0.01,
            power_t: 0.25,
            epochs: 1000,
        }
    }
}

/// Per-sample SGD on `½(y - xw - b)² + ½ l2 ‖w‖²`, reshuffled every epoch.
pub fn sgd_linear_fit(x: &Tensor2, y: &[f64], opts: &SgdOptions, seed: u64) -> Result<LinearModel> {
    check_xy(x, y)?;
    let (n, d) = x.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 1.0f64;
    for epoch in 0..opts.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let eta = opts.lr0 / t.powf(opts.power_t);
            let row = x.row(i);
            let err = y[i] - dot(row, &w) - b;
            let decay = 1.0 - eta * opts.l2;
            for (wj, xj) in w.iter_mut().zip(row) {
                *wj = *wj * decay + eta * err * xj;
            }
            b += eta * err;
            t += 1.0;
        }
        if !b.is_finite() || !w.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric {
                epoch,
                msg: "linear SGD diverged".into(),
            });
        }
    }
    Ok(LinearModel {
        weights: w,
        intercept: b,
        penalty: Penalty::L2(opts.l2),
    })
}
