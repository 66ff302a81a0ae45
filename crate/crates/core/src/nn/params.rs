use rand::Rng;

use super::tensor::Tensor2;
use crate::error::{Error, Result};

/// Handle to a trainable tensor inside [`ModelParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

/// Handle to a non-trainable buffer (e.g. batch-norm running statistics).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BufferId(pub(crate) usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Tensor2,
    pub grad: Tensor2,
    /// Adam first and second moment estimates.
    pub m: Tensor2,
    pub v: Tensor2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Buffer {
    pub name: String,
    pub values: Vec<f64>,
}

/// Every trainable tensor of one model, in registration order, plus the
/// optimizer state and auxiliary buffers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelParams {
    pub(crate) params: Vec<Param>,
    pub(crate) buffers: Vec<Buffer>,
    pub(crate) step: u64,
}

impl ModelParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, value: Tensor2) -> ParamId {
        let (r, c) = value.shape();
        self.params.push(Param {
            name: name.to_string(),
            value,
            grad: Tensor2::zeros(r, c),
            m: Tensor2::zeros(r, c),
            v: Tensor2::zeros(r, c),
        });
        ParamId(self.params.len() - 1)
    }

    /// Glorot-uniform `rows x cols` matrix.
    pub fn add_glorot(&mut self, name: &str, rows: usize, cols: usize, rng: &mut impl Rng) -> ParamId {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let t = Tensor2::from_fn(rows, cols, |_, _| rng.random_range(-limit..=limit));
        self.add(name, t)
    }

    pub fn add_buffer(&mut self, name: &str, values: Vec<f64>) -> BufferId {
        self.buffers.push(Buffer {
            name: name.to_string(),
            values,
        });
        BufferId(self.buffers.len() - 1)
    }

    #[inline]
    pub fn value(&self, id: ParamId) -> &Tensor2 {
        &self.params[id.0].value
    }

    #[inline]
    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor2 {
        &mut self.params[id.0].value
    }

    #[inline]
    pub fn grad(&self, id: ParamId) -> &Tensor2 {
        &self.params[id.0].grad
    }

    #[inline]
    pub fn grad_mut(&mut self, id: ParamId) -> &mut Tensor2 {
        &mut self.params[id.0].grad
    }

    pub fn buffer(&self, id: BufferId) -> &[f64] {
        &self.buffers[id.0].values
    }

    pub fn buffer_mut(&mut self, id: BufferId) -> &mut Vec<f64> {
        &mut self.buffers[id.0].values
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    pub fn buffers(&self) -> &[Buffer] {
        &self.buffers
    }

    pub fn buffers_mut(&mut self) -> &mut [Buffer] {
        &mut self.buffers
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.data().len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    /// Adds `delta` to the gradient of `id`.
    pub fn accumulate(&mut self, id: ParamId, delta: &Tensor2) -> Result<()> {
        self.params[id.0].grad.add_assign(delta)
    }

    /// Flat view `(param index, element index)` of scalar `k`.
    pub fn locate(&self, mut k: usize) -> Option<(usize, usize)> {
        for (i, p) in self.params.iter().enumerate() {
            let len = p.value.data().len();
            if k < len {
                return Some((i, k));
            }
            k -= len;
        }
        None
    }

    /// Copies values (not gradients or moments) from a structurally
    /// identical parameter set.
    pub fn copy_values_from(&mut self, other: &ModelParams) -> Result<()> {
        self.check_same_layout(other)?;
        for (a, b) in self.params.iter_mut().zip(&other.params) {
            a.value = b.value.clone();
        }
        for (a, b) in self.buffers.iter_mut().zip(&other.buffers) {
            a.values = b.values.clone();
        }
        Ok(())
    }

    pub fn check_same_layout(&self, other: &ModelParams) -> Result<()> {
        let same = self.params.len() == other.params.len()
            && self.buffers.len() == other.buffers.len()
            && self
                .params
                .iter()
                .zip(&other.params)
                .all(|(a, b)| a.name == b.name && a.value.shape() == b.value.shape())
            && self
                .buffers
                .iter()
                .zip(&other.buffers)
                .all(|(a, b)| a.name == b.name && a.values.len() == b.values.len());
        if !same {
            return Err(Error::Shape("parameter layouts differ".into()));
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.value.is_finite())
    }

    /// Sets every parameter value to zero.
    pub fn zero_values(&mut self) {
        for p in &mut self.params {
            p.value.fill(0.0);
        }
    }
}
