//! Ingestion to evaluation: feature assembly, standardisation, splitting,
//! training with validation-based checkpoint selection, and reports.

mod config;
mod data;
mod eval;
mod ingest;
mod report;
mod run;
mod scaler;
mod split;
mod train;

pub use config::{
    derive_seed, CorpusSection, FeatureMode, GnnSection, ModelKind, OptimConfig, SplitConfig, TrainConfig,
    CONFIG_VERSION,
};
pub use data::{assemble_features, Dataset, Labels};
pub use ingest::{build_dataset, graph_features, text_features};
pub use eval::{distribution_tsv, evaluate, label_distribution, report_named_predictions, NamedRow, NamedTable};
pub use report::{DatasetSummary, ResultRow, RunReport, REPORT_VERSION};
pub use run::{
    dataset_split, load_run, predictions_tsv, prepare_inputs, run_experiment, run_model, Artifact, ModelRun,
    ModelSpec, TrainedModel, HISTORY_FILE, LINEAR_FILE, NETWORK_FILE, PREDICTIONS_FILE, SCALER_FILE, SPEC_FILE,
};
pub use scaler::{Scaler, DEGENERATE_STD};
pub use split::{parse_split, split, split_sizes, Split, SplitSet};
pub use train::{fit_node_model, CheckpointStore, EpochRecord, TrainOutcome, TrainingData};
