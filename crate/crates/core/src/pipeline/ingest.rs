//! Turns raw inputs into a [`Dataset`].

use crate::error::Result;
use crate::features::FeatureMatrix;
use crate::graph::CsGraph;
use crate::metrics::all_metrics;
use crate::text::{embed_all, train_skipgram, Corpus, EmbeddingTable, SkipGramStats};

use super::config::{derive_seed, TrainConfig};
use super::data::{Dataset, Labels};

/// Graph metrics of the full graph, seeded from the run's root seed.
pub fn graph_features(g: &CsGraph, cfg: &TrainConfig) -> Result<FeatureMatrix> {
    all_metrics(g, derive_seed(cfg.seed, "communities"))
}

/// Trains word vectors on `corpus` and averages them per author.
pub fn text_features(corpus: &Corpus, cfg: &TrainConfig) -> Result<(FeatureMatrix, EmbeddingTable, SkipGramStats)> {
    let (table, stats) = train_skipgram(corpus, &cfg.skipgram_config())?;
    let features = embed_all(corpus, &table)?;
    Ok((features, table, stats))
}

/// Dataset with graph features and, when a corpus is given, text features.
pub fn build_dataset(g: &CsGraph, corpus: Option<&Corpus>, labels: &Labels, cfg: &TrainConfig) -> Result<Dataset> {
    let metrics = graph_features(g, cfg)?;
    let text = corpus.map(|c| text_features(c, cfg)).transpose()?.map(|t| t.0);
    Dataset::new(g, Some(metrics), text, labels)
}
