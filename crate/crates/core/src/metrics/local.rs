use super::MetricVector;
use crate::error::{Error, Result};
use crate::graph::CsGraph;

/// Sum of incident edge weights.
pub fn degree(g: &CsGraph) -> Result<MetricVector> {
    let values = (0..g.num_vertices()).map(|v| g.weighted_degree(v)).collect();
    MetricVector::new("degree", values)
}

/// `|N(v)| / (n - 1)`, ignoring weights.
pub fn degree_centrality(g: &CsGraph) -> Result<MetricVector> {
    let n = g.num_vertices();
    if n < 2 {
        return Err(Error::Domain(format!(
            "degree centrality needs at least 2 vertices, graph has {n}"
        )));
    }
    let denom = (n - 1) as f64;
    let values = (0..n).map(|v| g.num_neighbors(v) as f64 / denom).collect();
    MetricVector::new("degree_centrality", values)
}

/// Mean unweighted degree of the neighbours; 0 for isolated vertices.
pub fn neighbor_avg_degree(g: &CsGraph) -> Result<MetricVector> {
    let values = (0..g.num_vertices())
        .map(|v| {
            let nb = g.neighbors(v);
            if nb.is_empty() {
                return 0.0;
            }
            // Integer sum: exact and independent of neighbour order.
            let total: usize = nb.iter().map(|&u| g.num_neighbors(u as usize)).sum();
            total as f64 / nb.len() as f64
        })
        .collect();
    MetricVector::new("neighbor_avg_degree", values)
}

/// Shannon entropy of the incident weight distribution scaled by `ln |N(v)|`.
///
/// Vertices with fewer than two neighbours get 0.
pub fn diversity(g: &CsGraph) -> Result<MetricVector> {
    let values = (0..g.num_vertices())
        .map(|v| {
            let ws = g.weights(v);
            if ws.len() < 2 {
                return 0.0;
            }
            if ws.iter().all(|&w| w == ws[0]) {
                return 1.0;
            }
            let total: f64 = ws.iter().sum();
            let mut terms: Vec<f64> = ws
                .iter()
                .map(|&w| {
                    let p = w / total;
                    -p * p.ln()
                })
                .collect();
            terms.sort_by(f64::total_cmp);
            let h: f64 = terms.iter().sum();
            (h / (ws.len() as f64).ln()).clamp(0.0, 1.0)
        })
        .collect();
    MetricVector::new("diversity", values)
}
