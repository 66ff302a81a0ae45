//! One (model, feature set) run and the multi-run experiment.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{lasso_fit, mlp_fit, sgd_linear_fit, LinearModel, MlpConfig, MlpModel, Penalty};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::gnn::{GnnConfig, GnnModel, NodeModel};
use crate::graph::AdjacencyOperator;
use crate::nn::{Checkpoint, Mode, Tensor2};

use super::config::{derive_seed, FeatureMode, ModelKind, TrainConfig};
use super::data::Dataset;
use super::eval::evaluate;
use super::report::{DatasetSummary, ResultRow, RunReport, REPORT_VERSION};
use super::scaler::Scaler;
use super::split::{split, Split};
use super::train::{fit_node_model, CheckpointStore, TrainOutcome, TrainingData};

/// Architecture description stored next to every trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub model: ModelKind,
    pub features: FeatureMode,
    pub columns: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gnn: Option<GnnConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mlp: Option<MlpConfig>,
}

impl ModelSpec {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serialises")
    }

    pub fn from_json(text: &str) -> Result<ModelSpec> {
        serde_json::from_str(text).map_err(|e| Error::format("model spec", e.to_string()))
    }
}

/// Fitted parameters of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum Artifact {
    Network(Checkpoint),
    /// Linear models; the mean predictor is an all-zero weight vector.
    Linear(LinearModel),
}

pub const SPEC_FILE: &str = "spec.json";
pub const SCALER_FILE: &str = "scaler.bin";
pub const NETWORK_FILE: &str = "model.ckpt";
pub const LINEAR_FILE: &str = "model.bin";
pub const PREDICTIONS_FILE: &str = "predictions.tsv";
pub const HISTORY_FILE: &str = "history.tsv";

/// A model rebuilt from its artifact, ready for inference.
pub enum TrainedModel {
    Network(Box<dyn NodeModel>),
    Linear(LinearModel),
}

impl TrainedModel {
    pub fn predict(&mut self, x: &Tensor2) -> Result<Vec<f64>> {
        match self {
            TrainedModel::Network(m) => m.forward(x, Mode::Eval),
            TrainedModel::Linear(m) => m.predict(x),
        }
    }
}

fn network(spec: &ModelSpec, dataset: &Dataset, seed: u64) -> Result<Box<dyn NodeModel>> {
    let d = spec.columns.len();
    Ok(match (spec.model.variant(), &spec.gnn, &spec.mlp) {
        (Some(_), Some(g), _) => {
            let op = Arc::new(AdjacencyOperator::new(dataset.graph(), g.variant.operator_kind()));
            Box::new(GnnModel::new(g.clone(), d, op, seed)?)
        }
        (None, _, Some(m)) if spec.model == ModelKind::Mlp => Box::new(MlpModel::new(m.clone(), d, seed)?),
        _ => return Err(Error::format("model spec", format!("incomplete spec for {}", spec.model))),
    })
}

impl Artifact {
    /// Rebuilds the model; graph models are bound to `dataset`'s graph.
    pub fn restore(&self, spec: &ModelSpec, dataset: &Dataset) -> Result<TrainedModel> {
        match self {
            Artifact::Linear(m) => Ok(TrainedModel::Linear(m.clone())),
            Artifact::Network(ck) => {
                let mut m = network(spec, dataset, 0)?;
                m.params().check_same_layout(&ck.params)?;
                *m.params_mut() = ck.params.clone();
                Ok(TrainedModel::Network(m))
            }
        }
    }
}

/// Result of training one model on one feature set.
#[derive(Debug, Clone)]
pub struct ModelRun {
    pub spec: ModelSpec,
    pub scaler: Scaler,
    pub artifact: Artifact,
    pub outcome: TrainOutcome,
    /// One prediction per dataset row, labelled or not.
    pub predictions: Vec<f64>,
    pub val: (f64, f64),
    pub test: (f64, f64),
}

impl ModelRun {
    pub fn dir_name(model: ModelKind, features: FeatureMode) -> String {
        format!("{model}-{features}")
    }

    pub fn predictions_tsv(&self, ids: &[String]) -> String {
        predictions_tsv(ids, &self.predictions)
    }

    /// Writes spec, scaler, parameters, predictions and history to `dir`.
    pub fn save(&self, dir: &Path, ids: &[String]) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, text: String| {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(p, e))
        };
        write(SPEC_FILE, self.spec.to_json())?;
        self.scaler.save(&dir.join(SCALER_FILE))?;
        match &self.artifact {
            Artifact::Network(ck) => ck.save(&dir.join(NETWORK_FILE))?,
            Artifact::Linear(m) => m.save(&dir.join(LINEAR_FILE))?,
        }
        write(PREDICTIONS_FILE, self.predictions_tsv(ids))?;
        write(HISTORY_FILE, self.outcome.history_tsv())
    }
}

pub fn predictions_tsv(ids: &[String], pred: &[f64]) -> String {
    let mut s = String::from("author_id\tprediction\n");
    for (id, p) in ids.iter().zip(pred) {
        let _ = writeln!(s, "{id}\t{p}");
    }
    s
}

/// Spec, scaler and artifact of a run saved with [`ModelRun::save`].
pub fn load_run(dir: &Path) -> Result<(ModelSpec, Scaler, Artifact)> {
    let p = dir.join(SPEC_FILE);
    let spec = ModelSpec::from_json(&std::fs::read_to_string(&p).map_err(|e| Error::io(p, e))?)?;
    let scaler = Scaler::load(&dir.join(SCALER_FILE))?;
    let artifact = match spec.model {
        ModelKind::Gnn | ModelKind::Gcn | ModelKind::Mlp => Artifact::Network(Checkpoint::load(&dir.join(NETWORK_FILE))?),
        _ => Artifact::Linear(LinearModel::load(&dir.join(LINEAR_FILE))?),
    };
    if scaler.columns != spec.columns {
        return Err(Error::format("model spec", "scaler columns differ from the spec"));
    }
    Ok((spec, scaler, artifact))
}

/// Standardised features of `dataset` as seen by a saved model.
pub fn prepare_inputs(dataset: &Dataset, spec: &ModelSpec, scaler: &Scaler) -> Result<Tensor2> {
    let f = dataset.features(spec.features)?;
    Ok(scaler.transform(&f)?.into_values())
}

/// Trains and evaluates one model on one feature set.
///
/// Features are standardised with statistics of the training rows. Linear
/// models and the mean predictor see the training rows only; network models
/// select their checkpoint on the validation rows. `store_dir`, when given,
/// receives the network checkpoint during training.
pub fn run_model(
    dataset: &Dataset,
    split: &Split,
    model: ModelKind,
    features: FeatureMode,
    cfg: &TrainConfig,
    store_dir: Option<&Path>,
) -> Result<ModelRun> {
    let raw: FeatureMatrix = dataset.features(features)?;
    let scaler = Scaler::fit(&raw, &split.train)?;
    let x = scaler.transform(&raw)?.into_values();
    let y = dataset.targets();
    let y_train: Vec<f64> = split.train.iter().map(|&i| y[i]).collect();
    let mut spec = ModelSpec {
        model,
        features,
        columns: raw.columns().to_vec(),
        gnn: None,
        mlp: None,
    };
    let (artifact, outcome) = match model {
        ModelKind::Mean => {
            let mean = y_train.iter().sum::<f64>() / y_train.len() as f64;
            let m = LinearModel {
                weights: vec![0.0; x.cols()],
                intercept: mean,
                penalty: Penalty::L2(0.0),
            };
            (Artifact::Linear(m), TrainOutcome::default())
        }
        ModelKind::Lasso => {
            let fit = lasso_fit(&x.select_rows(&split.train), &y_train, &cfg.lasso)?;
            if !fit.converged {
                log::warn!("lasso on {features} features stopped after {} sweeps", fit.sweeps);
            }
            (Artifact::Linear(fit.model), TrainOutcome::default())
        }
        ModelKind::Sgd => {
            let seed = derive_seed(cfg.seed, "sgd");
            let m = sgd_linear_fit(&x.select_rows(&split.train), &y_train, &cfg.sgd, seed)?;
            (Artifact::Linear(m), TrainOutcome::default())
        }
        ModelKind::Mlp | ModelKind::Gnn | ModelKind::Gcn => {
            if let Some(v) = model.variant() {
                spec.gnn = Some(cfg.gnn.config(v));
            } else {
                spec.mlp = Some(cfg.mlp.clone());
            }
            let tag = spec.to_json();
            let mut store = match store_dir {
                Some(d) => {
                    std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
                    CheckpointStore::disk(d.join(NETWORK_FILE))
                }
                None => CheckpointStore::memory(),
            };
            let data = TrainingData {
                x: &x,
                targets: &y,
                train: &split.train,
                val: &split.val,
            };
            let dropout_seed = derive_seed(cfg.seed, "dropout");
            let (params, outcome) = if model == ModelKind::Mlp {
                let (m, o) = mlp_fit(&cfg.mlp, &data, &cfg.train, derive_seed(cfg.seed, "init"), dropout_seed, &tag, &mut store)?;
                (m.params().clone(), o)
            } else {
                let mut m = network(&spec, dataset, derive_seed(cfg.seed, "init"))?;
                let o = fit_node_model(m.as_mut(), &data, &cfg.train, dropout_seed, &tag, &mut store)?;
                (m.params().clone(), o)
            };
            let ck = Checkpoint {
                tag,
                params,
                rng: Default::default(),
                epoch: outcome.best_epoch.unwrap_or(0) as u64,
            };
            (Artifact::Network(ck), outcome)
        }
    };
    let predictions = artifact.restore(&spec, dataset)?.predict(&x)?;
    if let Some(i) = predictions.iter().position(|p| !p.is_finite()) {
        return Err(Error::Numeric {
            epoch: outcome.history.len(),
            msg: format!("{model} predicted a non-finite value for row {i}"),
        });
    }
    let val = evaluate(&predictions, &y, &split.val)?;
    let test = evaluate(&predictions, &y, &split.test)?;
    log::info!("{model}/{features}: test MAE {:.4} MSE {:.4}", test.0, test.1);
    Ok(ModelRun {
        spec,
        scaler,
        artifact,
        outcome,
        predictions,
        val,
        test,
    })
}

/// The split used by every run of `cfg` on `dataset`.
pub fn dataset_split(dataset: &Dataset, cfg: &TrainConfig) -> Result<Split> {
    let labels = dataset.targets();
    split(&dataset.labeled(), Some(&labels), &cfg.split, derive_seed(cfg.seed, "split"))
}

/// Runs every requested (model, feature set) pair, concurrently.
///
/// With `out` set, each run is saved under `out/<model>-<features>/`.
pub fn run_experiment(
    dataset: &Dataset,
    cfg: &TrainConfig,
    models: &[ModelKind],
    modes: &[FeatureMode],
    out: Option<&Path>,
) -> Result<(RunReport, Split, Vec<ModelRun>)> {
    cfg.validate()?;
    let split = dataset_split(dataset, cfg)?;
    let jobs: Vec<(ModelKind, FeatureMode)> = models
        .iter()
        .flat_map(|&m| modes.iter().map(move |&f| (m, f)))
        .collect();
    let runs: Vec<ModelRun> = jobs
        .par_iter()
        .map(|&(m, f)| {
            let dir = out.map(|o| o.join(ModelRun::dir_name(m, f)));
            let run = run_model(dataset, &split, m, f, cfg, dir.as_deref())?;
            if let Some(d) = &dir {
                run.save(d, dataset.ids())?;
            }
            Ok(run)
        })
        .collect::<Result<_>>()?;
    let report = RunReport {
        format_version: REPORT_VERSION,
        seed: cfg.seed,
        config: cfg.clone(),
        dataset: DatasetSummary {
            vertices: dataset.num_vertices(),
            edges: dataset.graph().num_edges(),
            labeled: dataset.labeled().len(),
            train: split.train.len(),
            val: split.val.len(),
            test: split.test.len(),
            excluded: dataset.excluded().len(),
        },
        results: runs
            .iter()
            .map(|r| ResultRow {
                model: r.spec.model,
                features: r.spec.features,
                val_mae: r.val.0,
                test_mae: r.test.0,
                test_mse: r.test.1,
                best_epoch: r.outcome.best_epoch,
                epochs_run: r.outcome.history.len(),
            })
            .collect(),
    };
    Ok((report, split, runs))
}
