//! Full-batch training with best-on-validation checkpointing.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::NodeModel;
use crate::nn::{adam_step, Checkpoint, Mode, RngState, Tensor2};

use super::config::{derive_seed, OptimConfig};
use super::eval::evaluate;

/// Where the best checkpoint of a run is kept.
#[derive(Debug)]
pub enum CheckpointStore {
    Memory(Option<Vec<u8>>),
    Disk { path: PathBuf, written: bool },
}

impl CheckpointStore {
    pub fn memory() -> Self {
        CheckpointStore::Memory(None)
    }

    pub fn disk(path: impl Into<PathBuf>) -> Self {
        CheckpointStore::Disk {
            path: path.into(),
            written: false,
        }
    }

    fn put(&mut self, ck: &Checkpoint) -> Result<()> {
        match self {
            CheckpointStore::Memory(slot) => *slot = Some(ck.to_bytes()),
            CheckpointStore::Disk { path, written } => {
                ck.save(path)?;
                *written = true;
            }
        }
        Ok(())
    }

    /// The stored checkpoint, if one was ever written.
    pub fn get(&self) -> Result<Option<Checkpoint>> {
        match self {
            CheckpointStore::Memory(None) | CheckpointStore::Disk { written: false, .. } => Ok(None),
            CheckpointStore::Memory(Some(bytes)) => Checkpoint::from_bytes(bytes).map(Some),
            CheckpointStore::Disk { path, .. } => Checkpoint::load(path).map(Some),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_mae: f64,
    /// A checkpoint was written after this epoch.
    pub improved: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub history: Vec<EpochRecord>,
    /// 1-based epoch of the reloaded checkpoint.
    pub best_epoch: Option<usize>,
    pub best_val_mae: Option<f64>,
}

impl TrainOutcome {
    pub fn history_tsv(&self) -> String {
        let mut s = String::from("epoch\ttrain_loss\tval_mae\tcheckpoint\n");
        for r in &self.history {
            s.push_str(&format!("{}\t{:e}\t{:e}\t{}\n", r.epoch, r.train_loss, r.val_mae, r.improved as u8));
        }
        s
    }
}

/// Everything the training loop needs besides the model.
pub struct TrainingData<'a> {
    pub x: &'a Tensor2,
    /// One target per row; rows outside `train` and `val` are never read.
    pub targets: &'a [f64],
    pub train: &'a [usize],
    pub val: &'a [usize],
}

fn gather(v: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| v[i]).collect()
}

/// Trains `model` for `cfg.epochs` epochs and leaves it holding the best
/// checkpoint.
///
/// Every epoch runs one training-mode forward pass over all rows, takes the
/// loss on the training rows only, backpropagates and applies one Adam step.
/// The validation MAE of an evaluation-mode pass decides whether the model
/// is checkpointed; only strict improvements count.
pub fn fit_node_model<M: NodeModel + ?Sized>(
    model: &mut M,
    data: &TrainingData,
    cfg: &OptimConfig,
    dropout_seed: u64,
    tag: &str,
    store: &mut CheckpointStore,
) -> Result<TrainOutcome> {
    let n = data.x.rows();
    if data.targets.len() != n {
        return Err(Error::Shape(format!("{} targets for {n} rows", data.targets.len())));
    }
    if data.train.is_empty() || data.val.is_empty() {
        return Err(Error::Validation("training and validation sets must be non-empty".into()));
    }
    let adam = cfg.adam();
    let y_train = gather(data.targets, data.train);
    let mut out = TrainOutcome::default();
    let mut best = f64::INFINITY;
    for epoch in 1..=cfg.epochs {
        let numeric = |msg: String| Error::Numeric { epoch, msg };
        let seed = derive_seed(dropout_seed, &epoch.to_string());
        model.params_mut().zero_grad();
        let pred = model.forward(data.x, Mode::Train { seed })?;
        let (loss, g) = cfg.loss.eval(&gather(&pred, data.train), &y_train)?;
        if !loss.is_finite() {
            return Err(numeric(format!("training loss is {loss}")));
        }
        let mut grad = vec![0.0; n];
        for (&i, gi) in data.train.iter().zip(g) {
            grad[i] = gi;
        }
        model.backward(&grad)?;
        adam_step(model.params_mut(), &adam);
        if !model.params().all_finite() {
            return Err(numeric("parameters became non-finite".into()));
        }
        let pred = model.forward(data.x, Mode::Eval)?;
        let (val_mae, _) = evaluate(&pred, data.targets, data.val)?;
        if !val_mae.is_finite() {
            return Err(numeric(format!("validation MAE is {val_mae}")));
        }
        let improved = val_mae < best;
        if improved {
            best = val_mae;
            store.put(&Checkpoint {
                tag: tag.to_string(),
                params: model.params().clone(),
                rng: RngState {
                    seed: dropout_seed,
                    counter: epoch as u64,
                },
                epoch: epoch as u64,
            })?;
            out.best_epoch = Some(epoch);
            out.best_val_mae = Some(val_mae);
        }
        log::debug!("epoch {epoch}: loss {loss:.6} val MAE {val_mae:.6}");
        out.history.push(EpochRecord {
            epoch,
            train_loss: loss,
            val_mae,
            improved,
        });
    }
    if let Some(ck) = store.get()? {
        model.params().check_same_layout(&ck.params)?;
        *model.params_mut() = ck.params;
    }
    Ok(out)
}
