use super::{CommunityAssignment, MetricVector};
use crate::error::{Error, Result};
use crate::graph::CsGraph;

fn check_cover(g: &CsGraph, ca: &CommunityAssignment) -> Result<()> {
    if ca.community_of.len() != g.num_vertices() {
        return Err(Error::Shape(format!(
            "partition covers {} of {} vertices",
            ca.community_of.len(),
            g.num_vertices()
        )));
    }
    if ca.community_of.iter().any(|&c| c >= ca.sizes.len()) {
        return Err(Error::Validation("community id out of range".into()));
    }
    Ok(())
}

/// `CB_v = Σ_c d_{v,c} · n_c / n` where `d_{v,c}` counts the edges from `v`
/// into community `c`.
pub fn community_centrality(g: &CsGraph, ca: &CommunityAssignment) -> Result<MetricVector> {
    check_cover(g, ca)?;
    let n = g.num_vertices() as f64;
    let values = (0..g.num_vertices())
        .map(|v| {
            // Σ_c d_{v,c} n_c equals Σ_{u ∈ N(v)} n_{c(u)}; integer sum.
            let s: usize = g
                .neighbors(v)
                .iter()
                .map(|&u| ca.sizes[ca.community_of[u as usize]])
                .sum();
            s as f64 / n
        })
        .collect();
    MetricVector::new("community_centrality", values)
}

/// Community mediator: entropy of the weighted share of `v`'s edges going to
/// each community, times `deg(v) / Σ_{u ∈ N(v)} deg(u)` (weighted degrees,
/// natural log, `0·ln 0 = 0`). Isolated vertices get 0.
pub fn community_mediator(g: &CsGraph, ca: &CommunityAssignment) -> Result<MetricVector> {
    check_cover(g, ca)?;
    let mut per_comm: Vec<(usize, f64)> = Vec::new();
    let values = (0..g.num_vertices())
        .map(|v| {
            let deg_v = g.weighted_degree(v);
            if deg_v == 0.0 {
                return 0.0;
            }
            per_comm.clear();
            per_comm.extend(
                g.neighbors(v)
                    .iter()
                    .zip(g.weights(v))
                    .map(|(&u, &w)| (ca.community_of[u as usize], w)),
            );
            per_comm.sort_unstable_by_key(|&(c, _)| c);
            let mut shares = Vec::new();
            let mut i = 0;
            while i < per_comm.len() {
                let c = per_comm[i].0;
                let mut s = 0.0;
                while i < per_comm.len() && per_comm[i].0 == c {
                    s += per_comm[i].1;
                    i += 1;
                }
                shares.push(s / deg_v);
            }
            let mut terms: Vec<f64> = shares
                .iter()
                .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 })
                .collect();
            terms.sort_by(f64::total_cmp);
            let h: f64 = terms.iter().sum::<f64>().max(0.0);
            let nb_deg: f64 = g.neighbors(v).iter().map(|&u| g.weighted_degree(u as usize)).sum();
            h * deg_v / nb_deg
        })
        .collect();
    MetricVector::new("community_mediator", values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::test_graphs::{parse, two_triangles};

    fn triangle_partition(g: &CsGraph) -> CommunityAssignment {
        CommunityAssignment::from_labels(g, &[0, 0, 0, 1, 1, 1]).unwrap()
    }

    #[test]
    fn centrality_on_two_triangles() {
        let g = two_triangles();
        let ca = triangle_partition(&g);
        let cb = community_centrality(&g, &ca).unwrap().values;
        let a1 = g.index_of("a1").unwrap();
        let a2 = g.index_of("a2").unwrap();
        assert_eq!(cb[a1], 1.5);
        assert_eq!(cb[a2], 1.0);
    }

    #[test]
    fn mediator_on_two_triangles() {
        let g = two_triangles();
        let ca = triangle_partition(&g);
        let cm = community_mediator(&g, &ca).unwrap().values;
        let a1 = g.index_of("a1").unwrap();
        let a2 = g.index_of("a2").unwrap();
        let h = -(2.0 / 3.0 * (2.0f64 / 3.0).ln() + 1.0 / 3.0 * (1.0f64 / 3.0).ln());
        assert!((h - 0.6365).abs() < 1e-4);
        // Neighbours of a1 are a2 (deg 2), a3 (deg 2) and b1 (deg 3).
        assert!((cm[a1] - h * 3.0 / 7.0).abs() < 1e-12);
        assert!((cm[a1] - 0.27279).abs() < 1e-5);
        assert_eq!(cm[a2], 0.0);
    }

    #[test]
    fn isolated_vertex_scores_zero() {
        let g = parse("a b 1\nc c 1\n");
        let ca = CommunityAssignment::from_labels(&g, &[0, 1, 2]).unwrap();
        assert_eq!(community_centrality(&g, &ca).unwrap().values[2], 0.0);
        assert_eq!(community_mediator(&g, &ca).unwrap().values[2], 0.0);
    }

    #[test]
    fn rejects_partial_partition() {
        let g = two_triangles();
        assert!(CommunityAssignment::from_labels(&g, &[0, 0, 0]).is_err());
        let ca = CommunityAssignment {
            community_of: vec![0, 0, 0],
            sizes: vec![3],
            modularity: 0.0,
            level_modularity: vec![],
        };
        assert!(community_centrality(&g, &ca).is_err());
        assert!(community_mediator(&g, &ca).is_err());
    }
}
