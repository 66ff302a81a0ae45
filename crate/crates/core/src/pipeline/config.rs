//! Versioned run configuration.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{LassoOptions, MlpConfig, SgdOptions};
use crate::error::{Error, Result};
use crate::gnn::{GnnConfig, Variant};
use crate::nn::{AdamConfig, LossKind};
use crate::text::SkipGramConfig;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    Text,
    Graph,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Predicts the mean training label everywhere.
    Mean,
    Lasso,
    Sgd,
    Mlp,
    Gnn,
    Gcn,
}

macro_rules! str_enum {
    ($t:ty, $what:literal, $($v:path => $s:literal),+ $(,)?) => {
        impl $t {
            pub const ALL: &'static [$t] = &[$($v),+];

            pub fn as_str(self) -> &'static str {
                match self { $($v => $s),+ }
            }
        }

        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $t {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok($v),)+
                    other => Err(Error::Config(format!(concat!("unknown ", $what, " {:?}"), other))),
                }
            }
        }
    };
}

str_enum!(FeatureMode, "feature set", FeatureMode::Text => "text", FeatureMode::Graph => "graph", FeatureMode::All => "all");
str_enum!(
    ModelKind, "model",
    ModelKind::Mean => "mean",
    ModelKind::Lasso => "lasso",
    ModelKind::Sgd => "sgd",
    ModelKind::Mlp => "mlp",
    ModelKind::Gnn => "gnn",
    ModelKind::Gcn => "gcn",
);

impl ModelKind {
    pub fn variant(self) -> Option<Variant> {
        match self {
            ModelKind::Gnn => Some(Variant::Gnn),
            ModelKind::Gcn => Some(Variant::Gcn),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_fraction: f64,
    /// Share of the training portion held out for model selection.
    pub val_fraction: f64,
    /// Stratify by label instead of a uniform shuffle.
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_fraction: 0.2,
            val_fraction: 0.1,
            stratified: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimConfig {
    pub epochs: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub loss: LossKind,
}

impl Default for OptimConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        OptimConfig {
            epochs: 300,
            lr: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            loss: LossKind::Mae,
        }
    }
}

impl OptimConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnnSection {
    pub layer_dims: Vec<usize>,
    pub readout_hidden: Vec<usize>,
    pub dropout: f64,
    /// Batch norm after each GNN layer; never applied to the GCN variant.
    pub gnn_batch_norm: bool,
}

impl Default for GnnSection {
    fn default() -> Self {
        let c = GnnConfig::new(Variant::Gnn);
        GnnSection {
            layer_dims: c.layer_dims,
            readout_hidden: c.readout_hidden,
            dropout: c.dropout,
            gnn_batch_norm: true,
        }
    }
}

impl GnnSection {
    pub fn config(&self, variant: Variant) -> GnnConfig {
        GnnConfig {
            variant,
            layer_dims: self.layer_dims.clone(),
            readout_hidden: self.readout_hidden.clone(),
            dropout: self.dropout,
            use_batch_norm: variant == Variant::Gnn && self.gnn_batch_norm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub min_count: u64,
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection { min_count: 1 }
    }
}

/// Every hyperparameter of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub version: u32,
    /// Root seed; every random stream of a run is derived from it.
    pub seed: u64,
    pub split: SplitConfig,
    pub train: OptimConfig,
    pub gnn: GnnSection,
    pub mlp: MlpConfig,
    pub lasso: LassoOptions,
    pub sgd: SgdOptions,
    pub corpus: CorpusSection,
    pub skipgram: SkipGramConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            version: CONFIG_VERSION,
            seed: 0,
            split: SplitConfig::default(),
            train: OptimConfig::default(),
            gnn: GnnSection::default(),
            mlp: MlpConfig::default(),
            lasso: LassoOptions::default(),
            sgd: SgdOptions::default(),
            corpus: CorpusSection::default(),
            skipgram: SkipGramConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn from_toml(text: &str) -> Result<TrainConfig> {
        let raw: toml::Value = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let version = raw.get("version").and_then(|v| v.as_integer());
        match version {
            Some(v) if v == CONFIG_VERSION as i64 => {}
            Some(v) => {
                return Err(Error::Config(format!(
                    "config schema version {v} is not supported (expected {CONFIG_VERSION})"
                )))
            }
            None => return Err(Error::Config("config is missing `version`".into())),
        }
        let cfg: TrainConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn load(path: &Path) -> Result<TrainConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TrainConfig::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.split;
        if !(s.train_fraction > 0.0 && s.train_fraction < 1.0) {
            return Err(Error::Config(format!("train_fraction {} outside (0, 1)", s.train_fraction)));
        }
        if !(s.val_fraction > 0.0 && s.val_fraction < 1.0) {
            return Err(Error::Config(format!("val_fraction {} outside (0, 1)", s.val_fraction)));
        }
        if !(self.train.lr >= 0.0) {
            return Err(Error::Config("learning rate must be non-negative".into()));
        }
        self.gnn.config(Variant::Gnn).validate()?;
        if !(0.0..1.0).contains(&self.mlp.dropout) {
            return Err(Error::Config("mlp dropout outside [0, 1)".into()));
        }
        if self.lasso.lambda < 0.0 {
            return Err(Error::Config("lasso lambda must be non-negative".into()));
        }
        self.skipgram.validate()
    }

    pub fn skipgram_config(&self) -> SkipGramConfig {
        SkipGramConfig {
            seed: derive_seed(self.seed, "skipgram"),
            ..self.skipgram.clone()
        }
    }
}

/// Independent sub-seed of `root` for the named purpose.
pub fn derive_seed(root: u64, purpose: &str) -> u64 {
    // FNV-1a of the purpose, mixed with the root by a splitmix64 finaliser.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in purpose.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = root ^ h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = TrainConfig::default();
        let text = c.to_toml();
        assert!(text.contains("epochs = 300"));
        assert!(text.contains("layer_dims = [32, 64]"));
        assert_eq!(TrainConfig::from_toml(&text).unwrap(), c);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = TrainConfig::from_toml("version = 1\nseed = 5\n[train]\nepochs = 10\n").unwrap();
        assert_eq!(c.seed, 5);
        assert_eq!(c.train.epochs, 10);
        assert_eq!(c.train.lr, 0.01);
        assert_eq!(c.sgd.epochs, 1000);
        assert_eq!(c.lasso.lambda, 1.0);
    }

    #[test]
    fn rejects_bad_versions_and_fields() {
        assert!(matches!(TrainConfig::from_toml("version = 2\n"), Err(Error::Config(_))));
        assert!(TrainConfig::from_toml("seed = 1\n").is_err());
        assert!(TrainConfig::from_toml("version = 1\nbogus = 1\n").is_err());
        assert!(TrainConfig::from_toml("version = 1\n[split]\ntrain_fraction = 1.5\n").is_err());
    }

    #[test]
    fn names_parse() {
        assert_eq!("gcn".parse::<ModelKind>().unwrap(), ModelKind::Gcn);
        assert_eq!("all".parse::<FeatureMode>().unwrap(), FeatureMode::All);
        assert!("xgboost".parse::<ModelKind>().is_err());
        assert_eq!(ModelKind::Sgd.to_string(), "sgd");
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, "split"), derive_seed(1, "init"));
        assert_ne!(derive_seed(1, "split"), derive_seed(2, "split"));
        assert_eq!(derive_seed(7, "x"), derive_seed(7, "x"));
    }
}
