//! Author impact prediction on weighted co-authorship graphs.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: compressed sparse co-authorship graph and its self-looped /
//!   symmetrically normalised propagation operators.
//! - [`metrics`]: the nine structural vertex features (degree family,
//!   PageRank, core and onion decompositions, diversity, community metrics
//!   on top of a Louvain partition).
//! - [`text`]: Skip-Gram with negative sampling over paper abstracts and
//!   per-author averaging.
//! - [`nn`]: a small dense numerical core with hand-written backward passes.
//! - [`gnn`]: the sum-aggregation and normalised-aggregation message-passing
//!   regressors with jumping-knowledge readout.
//! - [`baselines`]: Lasso, SGD linear regression, MLP and external predictions.
//! - [`pipeline`]: feature assembly, splitting, standardisation, training
//!   with best-on-validation checkpointing, evaluation and reporting.
//! - [`synth`]: a preferential-attachment dataset generator.

pub mod baselines;
pub mod binio;
pub mod error;
pub mod features;
pub mod gnn;
pub mod graph;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod synth;
pub mod text;

pub use error::{Error, ErrorKind, Result};
pub use features::FeatureMatrix;
pub use graph::{AdjacencyOperator, CsGraph, OperatorKind};
