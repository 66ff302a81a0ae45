//! Finite-difference checks of the full message-passing models.

use std::sync::Arc;

use hindex::gnn::{GnnConfig, GnnModel, NodeModel, Variant};
use hindex::graph::{AdjacencyOperator, CsGraph};
use hindex::nn::{grad_check, mae_loss, Differentiable, GradCheckOptions, ModelParams, Mode, Tensor2};
use hindex::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(n: usize, rng: &mut impl Rng) -> CsGraph {
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in (u + 1)..n as u32 {
            if rng.random::<f64>() < 0.3 {
                edges.push((u, v, rng.random_range(1..4) as f64));
            }
        }
    }
    CsGraph::from_edges((0..n).map(|i| i.to_string()).collect(), &edges).unwrap().0
}

/// Masked MAE of a model over a fixed batch.
struct MaskedMae {
    model: GnnModel,
    x: Tensor2,
    y: Vec<f64>,
    mask: Vec<usize>,
    mode: Mode,
}

impl MaskedMae {
    fn eval(&mut self, with_grad: bool) -> Result<f64> {
        // Batch-norm running statistics must not drift between evaluations.
        let buffers: Vec<Vec<f64>> = self.model.params().buffers().iter().map(|b| b.values.clone()).collect();
        let pred = self.model.forward(&self.x, self.mode)?;
        restore_buffers(self.model.params_mut(), &buffers);
        let picked: Vec<f64> = self.mask.iter().map(|&i| pred[i]).collect();
        let targets: Vec<f64> = self.mask.iter().map(|&i| self.y[i]).collect();
        let (loss, g) = mae_loss(&picked, &targets)?;
        if with_grad {
            let mut full = vec![0.0; pred.len()];
            for (&i, gi) in self.mask.iter().zip(g) {
                full[i] = gi;
            }
            self.model.params_mut().zero_grad();
            self.model.backward(&full)?;
        }
        Ok(loss)
    }

    /// Smallest distance to a ReLU kink or an MAE tie at the current point.
    fn margin(&mut self) -> f64 {
        let pred = self.model.forward(&self.x, self.mode).unwrap();
        let relu = self.model.kink_margin().unwrap();
        let tie = self.mask.iter().map(|&i| (pred[i] - self.y[i]).abs()).fold(f64::INFINITY, f64::min);
        relu.min(tie)
    }
}

fn restore_buffers(p: &mut ModelParams, values: &[Vec<f64>]) {
    for (b, v) in p.buffers_mut().iter_mut().zip(values) {
        b.values.clone_from(v);
    }
}

impl Differentiable for MaskedMae {
    fn params(&self) -> &ModelParams {
        self.model.params()
    }
    fn params_mut(&mut self) -> &mut ModelParams {
        self.model.params_mut()
    }
    fn loss(&mut self) -> Result<f64> {
        self.eval(false)
    }
    fn loss_and_grad(&mut self) -> Result<f64> {
        self.eval(true)
    }
}

/// Builds a problem whose starting point sits at least `2e-5` away from
/// every kink, nudging the inputs until it does.
fn problem(variant: Variant, n: usize, mode: Mode, seed: u64) -> MaskedMae {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = random_graph(n, &mut rng);
    let op = Arc::new(AdjacencyOperator::new(&g, variant.operator_kind()));
    let model = GnnModel::new(GnnConfig::new(variant), 5, op, seed).unwrap();
    let x = Tensor2::from_fn(n, 5, |_, _| rng.random_range(-1.0..1.0));
    let y = (0..n).map(|_| rng.random_range(0.0..4.0)).collect();
    let mask = (0..n).filter(|i| i % 3 != 2).collect();
    let mut p = MaskedMae { model, x, y, mask, mode };
    for _ in 0..200 {
        if p.margin() > 2e-5 {
            return p;
        }
        let nudge = Tensor2::from_fn(n, 5, |_, _| rng.random_range(-1e-2..1e-2));
        p.x.add_assign(&nudge).unwrap();
    }
    panic!("could not move away from kinks: {}", p.margin());
}

#[test]
fn full_models_pass_gradient_check() {
    for variant in [Variant::Gnn, Variant::Gcn] {
        for (mode, n) in [(Mode::Train { seed: 3 }, 12), (Mode::Eval, 20)] {
            let mut p = problem(variant, n, mode, 21);
            let report = grad_check(&mut p, &GradCheckOptions::default()).unwrap();
            assert!(report.passed, "{variant:?} {mode:?}: {report:?}");
            assert_eq!(report.checked, p.params().num_scalars());
        }
    }
}
