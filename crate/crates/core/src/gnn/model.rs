use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::GnnConfig;
use crate::error::{Error, Result};
use crate::graph::{spmm, AdjacencyOperator};
use crate::nn::{
    relu, relu_backward, BatchNorm, BatchNormCache, Dropout, Linear, MlpCache, MlpHead, ModelParams, Mode, Tensor2,
};

/// A model that maps a feature matrix to one prediction per row and can
/// backpropagate a gradient over those predictions.
pub trait NodeModel: Send {
    fn params(&self) -> &ModelParams;
    fn params_mut(&mut self) -> &mut ModelParams;
    /// Predictions for every row. Training mode also updates batch-norm
    /// running statistics. The pass is cached for [`NodeModel::backward`].
    fn forward(&mut self, x: &Tensor2, mode: Mode) -> Result<Vec<f64>>;
    /// Accumulates parameter gradients for `∂L/∂predictions` of the most
    /// recent forward pass, consuming its cache.
    fn backward(&mut self, grad: &[f64]) -> Result<()>;
}

struct LayerCache {
    input: Tensor2,
    pre_activation: Tensor2,
    norm: Option<BatchNormCache>,
}

struct ForwardCache {
    layers: Vec<LayerCache>,
    jk_mask: Option<Tensor2>,
    head: MlpCache,
}

/// Message-passing regressor over a fixed propagation operator.
pub struct GnnModel {
    config: GnnConfig,
    in_dim: usize,
    op: Arc<AdjacencyOperator>,
    params: ModelParams,
    layers: Vec<Linear>,
    norms: Vec<Option<BatchNorm>>,
    jk_dropout: Dropout,
    head: MlpHead,
    cache: Option<ForwardCache>,
}

impl GnnModel {
    /// Glorot-initialised model; `seed` fixes the initial weights.
    pub fn new(config: GnnConfig, in_dim: usize, op: Arc<AdjacencyOperator>, seed: u64) -> Result<Self> {
        config.validate()?;
        if in_dim == 0 {
            return Err(Error::Config("input width must be positive".into()));
        }
        if op.kind() != config.variant.operator_kind() {
            return Err(Error::Config(format!(
                "{:?} model needs a {:?} operator",
                config.variant,
                config.variant.operator_kind()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ModelParams::new();
        let mut layers = Vec::new();
        let mut norms = Vec::new();
        let mut width = in_dim;
        for (i, &d) in config.layer_dims.iter().enumerate() {
            layers.push(Linear::new(&mut params, &format!("mp{i}"), width, d, &mut rng));
            norms.push(config.use_batch_norm.then(|| BatchNorm::new(&mut params, &format!("bn{i}"), d)));
            width = d;
        }
        let jk_dropout = Dropout::new(config.dropout, 0)?;
        let head = MlpHead::new(
            &mut params,
            "readout",
            config.jk_width(),
            &config.readout_hidden,
            config.dropout,
            1,
            &mut rng,
        )?;
        Ok(GnnModel {
            config,
            in_dim,
            op,
            params,
            layers,
            norms,
            jk_dropout,
            head,
            cache: None,
        })
    }

    /// Model with the given (e.g. restored) parameters.
    pub fn with_params(config: GnnConfig, in_dim: usize, op: Arc<AdjacencyOperator>, params: ModelParams) -> Result<Self> {
        let mut model = GnnModel::new(config, in_dim, op, 0)?;
        model.params.check_same_layout(&params)?;
        model.params = params;
        Ok(model)
    }

    pub fn config(&self) -> &GnnConfig {
        &self.config
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn operator(&self) -> &AdjacencyOperator {
        &self.op
    }

    pub fn into_params(self) -> ModelParams {
        self.params
    }

    /// Distance of the cached forward pass from the nearest ReLU kink
    /// (smallest `|pre-activation|`), if a pass is cached.
    pub fn kink_margin(&self) -> Option<f64> {
        self.cache.as_ref().map(|c| {
            let mp = c.layers.iter().flat_map(|l| l.pre_activation.data()).fold(f64::INFINITY, |m, v| m.min(v.abs()));
            mp.min(c.head.min_abs_pre_activation())
        })
    }

    /// Per-layer outputs and their concatenation, in evaluation mode.
    pub fn representations(&mut self, x: &Tensor2) -> Result<(Vec<Tensor2>, Tensor2)> {
        let layers = self.propagate(x, Mode::Eval)?;
        let outs: Vec<Tensor2> = layers.into_iter().map(|(_, out)| out).collect();
        let refs: Vec<&Tensor2> = outs.iter().collect();
        let jk = Tensor2::hcat(&refs)?;
        Ok((outs, jk))
    }

    fn propagate(&mut self, x: &Tensor2, mode: Mode) -> Result<Vec<(LayerCache, Tensor2)>> {
        if x.rows() != self.op.dim() || x.cols() != self.in_dim {
            return Err(Error::Shape(format!(
                "features {:?} for a {}-vertex graph with input width {}",
                x.shape(),
                self.op.dim(),
                self.in_dim
            )));
        }
        let mut out = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (layer, norm) in self.layers.iter().zip(&self.norms) {
            let mut z = spmm(&self.op, &layer.forward_no_bias(&self.params, &h)?)?;
            layer.add_bias(&self.params, &mut z)?;
            let a = relu(&z);
            let (next, norm_cache) = match norm {
                Some(bn) => {
                    let (y, c) = bn.forward(&mut self.params, &a, mode)?;
                    (y, Some(c))
                }
                None => (a, None),
            };
            out.push((
                LayerCache {
                    input: h,
                    pre_activation: z,
                    norm: norm_cache,
                },
                next.clone(),
            ));
            h = next;
        }
        Ok(out)
    }
}

impl NodeModel for GnnModel {
    fn params(&self) -> &ModelParams {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ModelParams {
        &mut self.params
    }

    fn forward(&mut self, x: &Tensor2, mode: Mode) -> Result<Vec<f64>> {
        self.cache = None;
        let layers = self.propagate(x, mode)?;
        let outs: Vec<&Tensor2> = layers.iter().map(|(_, o)| o).collect();
        let jk = Tensor2::hcat(&outs)?;
        let (jk, jk_mask) = self.jk_dropout.forward(&jk, mode);
        let (pred, head) = self.head.forward(&self.params, &jk, mode)?;
        self.cache = Some(ForwardCache {
            layers: layers.into_iter().map(|(c, _)| c).collect(),
            jk_mask,
            head,
        });
        Ok(pred)
    }

    fn backward(&mut self, grad: &[f64]) -> Result<()> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::Validation("backward called before forward".into()))?;
        if grad.len() != self.op.dim() {
            return Err(Error::Shape(format!("{} gradients for {} vertices", grad.len(), self.op.dim())));
        }
        let g_jk = self.head.backward(&mut self.params, &cache.head, grad)?;
        let g_jk = Dropout::backward(&g_jk, cache.jk_mask.as_ref());
        let mut from_jk = g_jk.hsplit(&self.config.layer_dims)?;
        let mut carry: Option<Tensor2> = None;
        for (t, lc) in cache.layers.iter().enumerate().rev() {
            let mut g = std::mem::replace(&mut from_jk[t], Tensor2::zeros(0, 0));
            if let Some(c) = carry.take() {
                g.add_assign(&c)?;
            }
            if let (Some(bn), Some(nc)) = (&self.norms[t], &lc.norm) {
                g = bn.backward(&mut self.params, nc, &g)?;
            }
            let g_pre = relu_backward(&lc.pre_activation, &g)?;
            let layer = self.layers[t];
            layer.backward_bias(&mut self.params, &g_pre)?;
            // The propagation operator is symmetric, so it is its own adjoint.
            let g_hw = spmm(&self.op, &g_pre)?;
            if t == 0 {
                let dw = lc.input.matmul_tn(&g_hw)?;
                self.params.accumulate(layer.weight, &dw)?;
            } else {
                carry = Some(layer.backward_no_bias(&mut self.params, &lc.input, &g_hw)?);
            }
        }
        Ok(())
    }
}
