use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::NodeModel;
use crate::nn::{MlpCache, MlpHead, ModelParams, Mode, Tensor2};
use crate::pipeline::{fit_node_model, CheckpointStore, OptimConfig, TrainOutcome, TrainingData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub dropout: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: vec![64],
            dropout: 0.1,
        }
    }
}

/// Row-wise MLP regressor that ignores the graph.
pub struct MlpModel {
    config: MlpConfig,
    in_dim: usize,
    params: ModelParams,
    head: MlpHead,
    cache: Option<MlpCache>,
}

impl MlpModel {
    pub fn new(config: MlpConfig, in_dim: usize, seed: u64) -> Result<Self> {
        if in_dim == 0 || config.hidden.contains(&0) {
            return Err(Error::Config("MLP widths must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ModelParams::new();
        let head = MlpHead::new(&mut params, "mlp", in_dim, &config.hidden, config.dropout, 0, &mut rng)?;
        Ok(MlpModel {
            config,
            in_dim,
            params,
            head,
            cache: None,
        })
    }

    pub fn with_params(config: MlpConfig, in_dim: usize, params: ModelParams) -> Result<Self> {
        let mut m = MlpModel::new(config, in_dim, 0)?;
        m.params.check_same_layout(&params)?;
        m.params = params;
        Ok(m)
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }
}

impl NodeModel for MlpModel {
    fn params(&self) -> &ModelParams {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ModelParams {
        &mut self.params
    }

    fn forward(&mut self, x: &Tensor2, mode: Mode) -> Result<Vec<f64>> {
        if x.cols() != self.in_dim {
            return Err(Error::Shape(format!("{} features for input width {}", x.cols(), self.in_dim)));
        }
        let (out, cache) = self.head.forward(&self.params, x, mode)?;
        self.cache = Some(cache);
        Ok(out)
    }

    fn backward(&mut self, grad: &[f64]) -> Result<()> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::Validation("backward called before forward".into()))?;
        self.head.backward(&mut self.params, &cache, grad)?;
        Ok(())
    }
}

/// Trains an MLP with the same protocol as the graph models: full-batch Adam
/// on the training rows, best validation MAE checkpointed and reloaded.
pub fn mlp_fit(
    config: &MlpConfig,
    data: &TrainingData,
    optim: &OptimConfig,
    init_seed: u64,
    dropout_seed: u64,
    tag: &str,
    store: &mut CheckpointStore,
) -> Result<(MlpModel, TrainOutcome)> {
    let mut model = MlpModel::new(config.clone(), data.x.cols(), init_seed)?;
    let outcome = fit_node_model(&mut model, data, optim, dropout_seed, tag, store)?;
    Ok((model, outcome))
}
