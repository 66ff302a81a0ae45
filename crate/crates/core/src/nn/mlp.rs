//! Fully connected stack `Linear -> ReLU -> Dropout` repeated, ending in a
//! linear map to one output per row.

use rand::Rng;

use super::layers::{relu, relu_backward, Dropout, Linear, Mode};
use super::params::ModelParams;
use super::tensor::Tensor2;
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct MlpHead {
    hidden: Vec<Linear>,
    dropouts: Vec<Dropout>,
    output: Linear,
}

#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Input of every linear layer, the output layer last.
    inputs: Vec<Tensor2>,
    pre_activations: Vec<Tensor2>,
    masks: Vec<Option<Tensor2>>,
}

impl MlpCache {
    /// Smallest `|z|` over all ReLU inputs, `inf` without hidden layers.
    pub fn min_abs_pre_activation(&self) -> f64 {
        min_abs(&self.pre_activations)
    }
}

fn min_abs(ts: &[Tensor2]) -> f64 {
    ts.iter()
        .flat_map(|t| t.data().iter())
        .fold(f64::INFINITY, |m, v| m.min(v.abs()))
}

impl MlpHead {
    /// Dropout sites use streams `first_stream, first_stream + 1, ...`.
    pub fn new(
        params: &mut ModelParams,
        name: &str,
        in_dim: usize,
        hidden: &[usize],
        dropout: f64,
        first_stream: u64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let mut layers = Vec::new();
        let mut dropouts = Vec::new();
        let mut width = in_dim;
        for (i, &h) in hidden.iter().enumerate() {
            layers.push(Linear::new(params, &format!("{name}.hidden{i}"), width, h, rng));
            dropouts.push(Dropout::new(dropout, first_stream + i as u64)?);
            width = h;
        }
        let output = Linear::new(params, &format!("{name}.out"), width, 1, rng);
        Ok(MlpHead {
            hidden: layers,
            dropouts,
            output,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.hidden.first().unwrap_or(&self.output).in_dim
    }

    pub fn forward(&self, p: &ModelParams, x: &Tensor2, mode: Mode) -> Result<(Vec<f64>, MlpCache)> {
        let mut cache = MlpCache {
            inputs: Vec::with_capacity(self.hidden.len() + 1),
            pre_activations: Vec::with_capacity(self.hidden.len()),
            masks: Vec::with_capacity(self.hidden.len()),
        };
        let mut h = x.clone();
        for (layer, drop) in self.hidden.iter().zip(&self.dropouts) {
            let z = layer.forward(p, &h)?;
            let (a, mask) = drop.forward(&relu(&z), mode);
            cache.inputs.push(h);
            cache.pre_activations.push(z);
            cache.masks.push(mask);
            h = a;
        }
        let out = self.output.forward(p, &h)?;
        cache.inputs.push(h);
        Ok((out.into_vec(), cache))
    }

    /// Accumulates gradients and returns `∂L/∂x`.
    pub fn backward(&self, p: &mut ModelParams, cache: &MlpCache, grad: &[f64]) -> Result<Tensor2> {
        let last = cache.inputs.len() - 1;
        let mut g = self.output.backward(p, &cache.inputs[last], &Tensor2::column(grad))?;
        for i in (0..self.hidden.len()).rev() {
            let g_act = Dropout::backward(&g, cache.masks[i].as_ref());
            let g_pre = relu_backward(&cache.pre_activations[i], &g_act)?;
            g = self.hidden[i].backward(p, &cache.inputs[i], &g_pre)?;
        }
        Ok(g)
    }
}
