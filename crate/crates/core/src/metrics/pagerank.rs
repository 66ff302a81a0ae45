use rayon::prelude::*;

use super::MetricVector;
use crate::error::{Error, Result};
use crate::graph::CsGraph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankOptions {
    pub damping: f64,
    /// Stop once the L1 change between iterates falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankOptions {
    fn default() -> Self {
        PageRankOptions {
            damping: 0.85,
            tol: 1e-9,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageRankResult {
    pub values: MetricVector,
    pub iterations: usize,
    pub converged: bool,
}

/// Weighted PageRank by power iteration.
///
/// Transition probabilities are proportional to edge weight. Mass sitting on
/// isolated vertices is spread uniformly. When `max_iter` is hit the last
/// iterate is returned with `converged == false`.
pub fn pagerank(g: &CsGraph, opts: &PageRankOptions) -> Result<PageRankResult> {
    if !(opts.damping > 0.0 && opts.damping < 1.0) {
        return Err(Error::Config(format!("damping {} outside (0, 1)", opts.damping)));
    }
    let n = g.num_vertices();
    if n == 0 {
        return Ok(PageRankResult {
            values: MetricVector::new("pagerank", Vec::new())?,
            iterations: 0,
            converged: true,
        });
    }
    let d = opts.damping;
    let nf = n as f64;
    let out_weight: Vec<f64> = (0..n).map(|v| g.weighted_degree(v)).collect();
    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let dangling: f64 = (0..n).filter(|&v| out_weight[v] == 0.0).map(|v| rank[v]).sum();
        let base = (1.0 - d) / nf + d * dangling / nf;
        let share: Vec<f64> = (0..n)
            .map(|u| if out_weight[u] > 0.0 { rank[u] / out_weight[u] } else { 0.0 })
            .collect();
        next.par_iter_mut().enumerate().for_each(|(v, x)| {
            let inflow: f64 = g
                .neighbors(v)
                .iter()
                .zip(g.weights(v))
                .map(|(&u, &w)| share[u as usize] * w)
                .sum();
            *x = base + d * inflow;
        });
        let diff: f64 = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if diff < opts.tol {
            converged = true;
            break;
        }
    }
    let total: f64 = rank.iter().sum();
    rank.iter_mut().for_each(|x| *x /= total);
    Ok(PageRankResult {
        values: MetricVector::new("pagerank", rank)?,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::test_graphs::parse;

    #[test]
    fn cycle_is_uniform() {
        let g = parse("a b 1\nb c 1\nc d 1\nd a 1\n");
        let pr = pagerank(&g, &PageRankOptions::default()).unwrap();
        assert!(pr.converged);
        for v in pr.values.values {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn single_vertex() {
        let g = CsGraph::edgeless(vec!["a".into()]).unwrap();
        let pr = pagerank(&g, &PageRankOptions::default()).unwrap();
        assert_eq!(pr.values.values, vec![1.0]);
    }

    #[test]
    fn non_convergence_is_flagged() {
        let g = parse("c a 1\nc b 1\nc d 1\n");
        let opts = PageRankOptions {
            max_iter: 2,
            tol: 1e-15,
            ..Default::default()
        };
        let pr = pagerank(&g, &opts).unwrap();
        assert!(!pr.converged);
        assert_eq!(pr.iterations, 2);
        let s: f64 = pr.values.values.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_damping() {
        let g = parse("a b 1\n");
        for d in [0.0, 1.0, 1.5] {
            let opts = PageRankOptions {
                damping: d,
                ..Default::default()
            };
            assert!(pagerank(&g, &opts).is_err());
        }
    }
}
