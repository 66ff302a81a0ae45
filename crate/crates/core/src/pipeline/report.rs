//! Machine-readable and tabular summaries of an experiment.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::{FeatureMode, ModelKind, TrainConfig};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub vertices: usize,
    pub edges: usize,
    pub labeled: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: ModelKind,
    pub features: FeatureMode,
    pub val_mae: f64,
    pub test_mae: f64,
    pub test_mse: f64,
    pub best_epoch: Option<usize>,
    pub epochs_run: usize,
}

/// Outcome of an experiment. Timing lives in a separate file so that
/// identical runs produce identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub seed: u64,
    pub config: TrainConfig,
    pub dataset: DatasetSummary,
    pub results: Vec<ResultRow>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn from_json(text: &str) -> Result<RunReport> {
        let r: RunReport = serde_json::from_str(text).map_err(|e| Error::format("run report", e.to_string()))?;
        if r.format_version != REPORT_VERSION {
            return Err(Error::format(
                "run report",
                format!("version {} (expected {REPORT_VERSION})", r.format_version),
            ));
        }
        Ok(r)
    }

    pub fn load(path: &Path) -> Result<RunReport> {
        RunReport::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn result(&self, model: ModelKind, features: FeatureMode) -> Option<&ResultRow> {
        self.results.iter().find(|r| r.model == model && r.features == features)
    }

    /// Methods as rows, feature sets as column pairs of test MAE and MSE.
    pub fn table(&self) -> String {
        let mut models: Vec<ModelKind> = self.results.iter().map(|r| r.model).collect();
        models.sort();
        models.dedup();
        let mut modes: Vec<FeatureMode> = self.results.iter().map(|r| r.features).collect();
        modes.sort();
        modes.dedup();
        let mut s = String::from("method");
        for m in &modes {
            let _ = write!(s, " | {m} MAE | {m} MSE");
        }
        s.push('\n');
        for &model in &models {
            s.push_str(model.as_str());
            for &mode in &modes {
                match self.result(model, mode) {
                    Some(r) => {
                        let _ = write!(s, " | {:.4} | {:.4}", r.test_mae, r.test_mse);
                    }
                    None => s.push_str(" | - | -"),
                }
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> RunReport {
        let row = |model, features, mae| ResultRow {
            model,
            features,
            val_mae: mae,
            test_mae: mae,
            test_mse: mae * mae,
            best_epoch: None,
            epochs_run: 0,
        };
        RunReport {
            format_version: REPORT_VERSION,
            seed: 3,
            config: TrainConfig::default(),
            dataset: DatasetSummary {
                vertices: 10,
                edges: 9,
                labeled: 10,
                train: 1,
                val: 1,
                test: 8,
                excluded: 0,
            },
            results: vec![
                row(ModelKind::Gcn, FeatureMode::Graph, 1.5),
                row(ModelKind::Mean, FeatureMode::Graph, 3.0),
                row(ModelKind::Gcn, FeatureMode::Text, 2.0),
            ],
        }
    }

    #[test]
    fn json_round_trip() {
        let r = report();
        assert_eq!(RunReport::from_json(&r.to_json()).unwrap(), r);
        let bumped = r.to_json().replacen("\"format_version\": 1", "\"format_version\": 9", 1);
        assert!(RunReport::from_json(&bumped).is_err());
    }

    #[test]
    fn table_shape() {
        let t = report().table();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "method | text MAE | text MSE | graph MAE | graph MSE");
        assert_eq!(lines[1], "mean | - | - | 3.0000 | 9.0000");
        assert_eq!(lines[2], "gcn | 2.0000 | 4.0000 | 1.5000 | 2.2500");
    }
}
