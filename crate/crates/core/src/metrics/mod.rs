//! Per-vertex structural features of the co-authorship graph.
//!
//! Weighted metrics: degree, PageRank, diversity and community mediator.
//! Unweighted: degree centrality, neighbour average degree, core number,
//! onion layer and community centrality (edge counts).

mod community;
mod cores;
mod local;
mod louvain;
mod pagerank;

pub use community::{community_centrality, community_mediator};
pub use cores::{core_decomposition, core_numbers, onion_decomposition, Decomposition};
pub use local::{degree, degree_centrality, diversity, neighbor_avg_degree};
pub use louvain::{detect_communities, modularity, CommunityAssignment, LouvainOptions};
pub use pagerank::{pagerank, PageRankOptions, PageRankResult};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::CsGraph;
use crate::nn::Tensor2;

/// Column order of [`all_metrics`].
pub const METRIC_NAMES: [&str; 9] = [
    "degree",
    "degree_centrality",
    "neighbor_avg_degree",
    "pagerank",
    "core_number",
    "onion_layer",
    "diversity",
    "community_centrality",
    "community_mediator",
];

/// One named value per vertex. Values are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricVector {
    pub name: String,
    pub values: Vec<f64>,
}

impl MetricVector {
    pub(crate) fn new(name: &str, values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("{name}: non-finite value at vertex {i}")));
        }
        Ok(MetricVector {
            name: name.to_string(),
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsOptions {
    pub seed: u64,
    pub pagerank: PageRankOptions,
    pub louvain: LouvainOptions,
}

impl MetricsOptions {
    pub fn with_seed(seed: u64) -> Self {
        MetricsOptions {
            seed,
            pagerank: PageRankOptions::default(),
            louvain: LouvainOptions::default(),
        }
    }
}

/// All nine metrics as a feature matrix keyed by external author id.
pub fn all_metrics(g: &CsGraph, seed: u64) -> Result<FeatureMatrix> {
    all_metrics_with(g, &MetricsOptions::with_seed(seed))
}

pub fn all_metrics_with(g: &CsGraph, opts: &MetricsOptions) -> Result<FeatureMatrix> {
    let pr = pagerank(g, &opts.pagerank)?;
    if !pr.converged {
        log::warn!(
            "pagerank stopped after {} iterations without reaching tol {}",
            pr.iterations,
            opts.pagerank.tol
        );
    }
    let dec = core_decomposition(g);
    let ca = detect_communities(g, opts.seed, &opts.louvain);
    let cols = [
        degree(g)?,
        degree_centrality(g)?,
        neighbor_avg_degree(g)?,
        pr.values,
        MetricVector::new("core_number", dec.core_number.iter().map(|&c| c as f64).collect())?,
        MetricVector::new("onion_layer", dec.onion_layer.iter().map(|&c| c as f64).collect())?,
        diversity(g)?,
        community_centrality(g, &ca)?,
        community_mediator(g, &ca)?,
    ];
    debug_assert!(cols.iter().zip(METRIC_NAMES).all(|(c, n)| c.name == n));
    let n = g.num_vertices();
    let values = Tensor2::from_fn(n, cols.len(), |i, j| cols[j].values[i]);
    FeatureMatrix::new(
        g.ids().to_vec(),
        METRIC_NAMES.iter().map(|s| s.to_string()).collect(),
        values,
    )
}

#[cfg(test)]
pub(crate) mod test_graphs {
    use crate::graph::{CsGraph, LoadOptions};

    pub fn parse(s: &str) -> CsGraph {
        CsGraph::parse_edge_list(s, "t", LoadOptions::default()).unwrap().0
    }

    /// Triangles a1-a2-a3 and b1-b2-b3 joined by the bridge a1-b1.
    pub fn two_triangles() -> CsGraph {
        parse("a1 a2 1\na2 a3 1\na3 a1 1\nb1 b2 1\nb2 b3 1\nb3 b1 1\na1 b1 1\n")
    }

    /// Triangle a-b-c plus pendant d attached to a.
    pub fn triangle_pendant() -> CsGraph {
        parse("a b 1\nb c 1\nc a 1\na d 1\n")
    }
}

#[cfg(test)]
mod tests {
    use super::test_graphs::*;
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let g = two_triangles();
        let f = all_metrics(&g, 7).unwrap();
        assert_eq!(f.num_cols(), 9);
        assert_eq!(f.num_rows(), 6);
        assert_eq!(f.columns(), METRIC_NAMES);
        assert_eq!(f, all_metrics(&g, 7).unwrap());
    }

    #[test]
    fn pendant_row() {
        let g = triangle_pendant();
        let f = all_metrics(&g, 1).unwrap();
        let row = f.row_of("d").unwrap();
        assert_eq!(row[0], 1.0);
        assert!((row[1] - 1.0 / 3.0).abs() < 1e-15);
        // Unweighted degree of a is 3.
        assert_eq!(row[2], 3.0);
        assert_eq!(&row[4..7], &[1.0, 1.0, 0.0]);
        assert!(row[3] > 0.0 && row[3] < 0.25);
    }

    #[test]
    fn single_vertex_graph_is_a_domain_error() {
        let g = CsGraph::edgeless(vec!["x".into()]).unwrap();
        assert!(matches!(all_metrics(&g, 0), Err(Error::Domain(_))));
    }
}
