//! Louvain modularity maximisation on the weighted graph.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::CsGraph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LouvainOptions {
    pub resolution: f64,
    /// Maximum local-moving sweeps per level.
    pub max_sweeps: usize,
    pub max_levels: usize,
}

impl Default for LouvainOptions {
    fn default() -> Self {
        LouvainOptions {
            resolution: 1.0,
            max_sweeps: 100,
            max_levels: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommunityAssignment {
    /// Dense ids `0..C`, numbered by first appearance in vertex order.
    pub community_of: Vec<usize>,
    pub sizes: Vec<usize>,
    pub modularity: f64,
    /// Modularity of the partition after each aggregation level, starting
    /// with the all-singletons partition.
    pub level_modularity: Vec<f64>,
}

impl CommunityAssignment {
    pub fn num_communities(&self) -> usize {
        self.sizes.len()
    }

    /// Builds an assignment from arbitrary labels, relabelling densely.
    pub fn from_labels(g: &CsGraph, labels: &[usize]) -> Result<CommunityAssignment> {
        if labels.len() != g.num_vertices() {
            return Err(Error::Shape(format!(
                "{} labels for {} vertices",
                labels.len(),
                g.num_vertices()
            )));
        }
        let community_of = densify(labels);
        let c = community_of.iter().copied().max().map_or(0, |m| m + 1);
        let mut sizes = vec![0; c];
        for &x in &community_of {
            sizes[x] += 1;
        }
        let q = modularity(g, &community_of, 1.0);
        Ok(CommunityAssignment {
            community_of,
            sizes,
            modularity: q,
            level_modularity: vec![q],
        })
    }
}

fn densify(labels: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    let mut next = 0;
    labels
        .iter()
        .map(|&l| {
            *map.entry(l).or_insert_with(|| {
                next += 1;
                next - 1
            })
        })
        .collect()
}

/// Newman–Girvan modularity of a partition, with resolution `gamma`.
///
/// Returns 0 for graphs without edges.
pub fn modularity(g: &CsGraph, community_of: &[usize], gamma: f64) -> f64 {
    let two_m: f64 = (0..g.num_vertices()).map(|v| g.weighted_degree(v)).sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let c = community_of.iter().copied().max().map_or(0, |m| m + 1);
    let mut internal = vec![0.0; c];
    let mut total = vec![0.0; c];
    for v in 0..g.num_vertices() {
        let cv = community_of[v];
        total[cv] += g.weighted_degree(v);
        for (&u, &w) in g.neighbors(v).iter().zip(g.weights(v)) {
            if community_of[u as usize] == cv {
                internal[cv] += w;
            }
        }
    }
    internal
        .iter()
        .zip(&total)
        .map(|(&i, &t)| i / two_m - gamma * (t / two_m) * (t / two_m))
        .sum()
}

/// Weighted graph used inside the level loop; self-loops carry the internal
/// weight of aggregated communities (counted from both endpoints).
struct LevelGraph {
    adj: Vec<Vec<(usize, f64)>>,
    self_loop: Vec<f64>,
    degree: Vec<f64>,
}

impl LevelGraph {
    fn from_graph(g: &CsGraph) -> Self {
        let n = g.num_vertices();
        let adj: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|v| {
                g.neighbors(v)
                    .iter()
                    .zip(g.weights(v))
                    .map(|(&u, &w)| (u as usize, w))
                    .collect()
            })
            .collect();
        let degree = (0..n).map(|v| g.weighted_degree(v)).collect();
        LevelGraph {
            adj,
            self_loop: vec![0.0; n],
            degree,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    fn aggregate(&self, comm: &[usize], num: usize) -> LevelGraph {
        let mut maps: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); num];
        let mut self_loop = vec![0.0; num];
        let mut degree = vec![0.0; num];
        for v in 0..self.len() {
            let cv = comm[v];
            self_loop[cv] += self.self_loop[v];
            degree[cv] += self.degree[v];
            for &(u, w) in &self.adj[v] {
                let cu = comm[u];
                if cu == cv {
                    self_loop[cv] += w;
                } else {
                    *maps[cv].entry(cu).or_insert(0.0) += w;
                }
            }
        }
        LevelGraph {
            adj: maps.into_iter().map(|m| m.into_iter().collect()).collect(),
            self_loop,
            degree,
        }
    }

    fn modularity(&self, comm: &[usize], two_m: f64, gamma: f64) -> f64 {
        let c = comm.iter().copied().max().map_or(0, |m| m + 1);
        let mut internal = vec![0.0; c];
        let mut total = vec![0.0; c];
        for v in 0..self.len() {
            let cv = comm[v];
            total[cv] += self.degree[v];
            internal[cv] += self.self_loop[v];
            for &(u, w) in &self.adj[v] {
                if comm[u] == cv {
                    internal[cv] += w;
                }
            }
        }
        internal
            .iter()
            .zip(&total)
            .map(|(&i, &t)| i / two_m - gamma * (t / two_m) * (t / two_m))
            .sum()
    }
}

/// One local-moving phase. Returns whether any vertex changed community.
fn local_moving(
    lg: &LevelGraph,
    comm: &mut [usize],
    two_m: f64,
    opts: &LouvainOptions,
    rng: &mut ChaCha8Rng,
) -> bool {
    let n = lg.len();
    let mut tot = vec![0.0; n];
    for v in 0..n {
        tot[comm[v]] += lg.degree[v];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut links: BTreeMap<usize, f64> = BTreeMap::new();
    let mut any_move = false;
    for _ in 0..opts.max_sweeps {
        let mut moved = false;
        for &v in &order {
            let k_v = lg.degree[v];
            let own = comm[v];
            links.clear();
            for &(u, w) in &lg.adj[v] {
                *links.entry(comm[u]).or_insert(0.0) += w;
            }
            tot[own] -= k_v;
            let gain = |c: usize, k_in: f64| k_in - opts.resolution * tot[c] * k_v / two_m;
            let mut best = own;
            let mut best_gain = gain(own, links.get(&own).copied().unwrap_or(0.0));
            // Candidates in ascending id order; a move needs a strictly
            // larger gain, so equal gains keep the smallest id (or stay put).
            let eps = 1e-12 * (1.0 + k_v);
            for (&c, &k_in) in &links {
                if c == own {
                    continue;
                }
                let g = gain(c, k_in);
                if g > best_gain + eps {
                    best = c;
                    best_gain = g;
                }
            }
            tot[best] += k_v;
            if best != own {
                comm[v] = best;
                moved = true;
                any_move = true;
            }
        }
        if !moved {
            break;
        }
    }
    any_move
}

/// Louvain community detection.
///
/// Vertex visiting order is a shuffle seeded by `seed`, so the result is a
/// deterministic function of the graph, the seed and the options.
pub fn detect_communities(g: &CsGraph, seed: u64, opts: &LouvainOptions) -> CommunityAssignment {
    let n = g.num_vertices();
    let singletons: Vec<usize> = (0..n).collect();
    let two_m: f64 = (0..n).map(|v| g.weighted_degree(v)).sum();
    if two_m == 0.0 {
        return CommunityAssignment {
            community_of: singletons,
            sizes: vec![1; n],
            modularity: 0.0,
            level_modularity: vec![0.0],
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lg = LevelGraph::from_graph(g);
    // membership[v] = node of the current level graph holding original vertex v
    let mut membership = singletons.clone();
    let mut level_modularity = vec![lg.modularity(&singletons, two_m, opts.resolution)];
    for _ in 0..opts.max_levels {
        let mut comm: Vec<usize> = (0..lg.len()).collect();
        if !local_moving(&lg, &mut comm, two_m, opts, &mut rng) {
            break;
        }
        let q = lg.modularity(&comm, two_m, opts.resolution);
        let dense = densify(&comm);
        let num = dense.iter().copied().max().map_or(0, |m| m + 1);
        for m in membership.iter_mut() {
            *m = dense[*m];
        }
        level_modularity.push(q);
        lg = lg.aggregate(&dense, num);
        if num == 1 {
            break;
        }
    }
    let community_of = densify(&membership);
    let c = community_of.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0; c];
    for &x in &community_of {
        sizes[x] += 1;
    }
    CommunityAssignment {
        modularity: modularity(g, &community_of, opts.resolution),
        community_of,
        sizes,
        level_modularity,
    }
}
