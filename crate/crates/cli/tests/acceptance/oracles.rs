//! Brute-force reference implementations on dense adjacency matrices.

use hindex::graph::CsGraph;
use rand::Rng;

/// Dense symmetric weight matrix of `g`.
pub fn dense(g: &CsGraph) -> Vec<Vec<f64>> {
    let n = g.num_vertices();
    let mut a = vec![vec![0.0; n]; n];
    for (u, v, w) in g.edges() {
        a[u][v] = w;
        a[v][u] = w;
    }
    a
}

/// Random graph on `n` vertices with integer weights; some vertices may be
/// isolated.
pub fn random_graph(n: usize, rng: &mut impl Rng) -> CsGraph {
    let p: f64 = rng.random_range(0.02..0.4);
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in (u + 1)..n as u32 {
            if rng.random::<f64>() < p {
                edges.push((u, v, rng.random_range(1..6) as f64));
            }
        }
    }
    CsGraph::from_edges((0..n).map(|i| format!("v{i}")).collect(), &edges).unwrap().0
}

pub fn counts(a: &[Vec<f64>]) -> Vec<usize> {
    a.iter().map(|r| r.iter().filter(|&&w| w > 0.0).count()).collect()
}

pub fn degree(a: &[Vec<f64>]) -> Vec<f64> {
    a.iter().map(|r| r.iter().sum()).collect()
}

pub fn degree_centrality(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len() as f64;
    counts(a).iter().map(|&k| k as f64 / (n - 1.0)).collect()
}

pub fn neighbor_avg_degree(a: &[Vec<f64>]) -> Vec<f64> {
    let k = counts(a);
    (0..a.len())
        .map(|v| {
            let nb: Vec<usize> = (0..a.len()).filter(|&u| a[v][u] > 0.0).collect();
            if nb.is_empty() {
                0.0
            } else {
                nb.iter().map(|&u| k[u] as f64).sum::<f64>() / nb.len() as f64
            }
        })
        .collect()
}

fn degrees_within(a: &[Vec<f64>], alive: &[bool]) -> Vec<usize> {
    (0..a.len())
        .map(|v| (0..a.len()).filter(|&u| alive[u] && a[v][u] > 0.0).count())
        .collect()
}

/// Largest `k` whose k-core contains each vertex, by repeated pruning.
pub fn core_numbers(a: &[Vec<f64>]) -> Vec<u32> {
    let n = a.len();
    let mut core = vec![0u32; n];
    for k in 1..=n {
        let mut alive = vec![true; n];
        loop {
            let d = degrees_within(a, &alive);
            let drop: Vec<usize> = (0..n).filter(|&v| alive[v] && d[v] < k).collect();
            if drop.is_empty() {
                break;
            }
            for v in drop {
                alive[v] = false;
            }
        }
        if !alive.iter().any(|&x| x) {
            break;
        }
        for v in 0..n {
            if alive[v] {
                core[v] = k as u32;
            }
        }
    }
    core
}

/// Onion layers: each round removes all vertices whose remaining degree is
/// at most the current core value, which rises to the minimum remaining
/// degree whenever no vertex qualifies.
pub fn onion_layers(a: &[Vec<f64>]) -> Vec<u32> {
    let n = a.len();
    let mut alive = vec![true; n];
    let mut layer = vec![0u32; n];
    let mut core = 0usize;
    let mut round = 0;
    while alive.iter().any(|&x| x) {
        let d = degrees_within(a, &alive);
        let mut take: Vec<usize> = (0..n).filter(|&v| alive[v] && d[v] <= core).collect();
        if take.is_empty() {
            core = (0..n).filter(|&v| alive[v]).map(|v| d[v]).min().unwrap();
            take = (0..n).filter(|&v| alive[v] && d[v] <= core).collect();
        }
        round += 1;
        for v in take {
            alive[v] = false;
            layer[v] = round;
        }
    }
    layer
}

fn entropy(ps: impl Iterator<Item = f64>) -> f64 {
    ps.filter(|&p| p > 0.0).map(|p| -p * p.ln()).sum()
}

pub fn diversity(a: &[Vec<f64>]) -> Vec<f64> {
    a.iter()
        .map(|r| {
            let ws: Vec<f64> = r.iter().copied().filter(|&w| w > 0.0).collect();
            if ws.len() < 2 {
                return 0.0;
            }
            let s: f64 = ws.iter().sum();
            entropy(ws.iter().map(|w| w / s)) / (ws.len() as f64).ln()
        })
        .collect()
}

pub fn community_centrality(a: &[Vec<f64>], part: &[usize]) -> Vec<f64> {
    let n = a.len();
    let c = part.iter().max().map_or(0, |m| m + 1);
    let mut size = vec![0usize; c];
    for &p in part {
        size[p] += 1;
    }
    (0..n)
        .map(|v| {
            (0..c)
                .map(|k| {
                    let d = (0..n).filter(|&u| a[v][u] > 0.0 && part[u] == k).count();
                    d as f64 * size[k] as f64 / n as f64
                })
                .sum()
        })
        .collect()
}

pub fn community_mediator(a: &[Vec<f64>], part: &[usize]) -> Vec<f64> {
    let n = a.len();
    let c = part.iter().max().map_or(0, |m| m + 1);
    let deg = degree(a);
    (0..n)
        .map(|v| {
            if deg[v] == 0.0 {
                return 0.0;
            }
            let shares = (0..c).map(|k| (0..n).filter(|&u| part[u] == k).map(|u| a[v][u]).sum::<f64>() / deg[v]);
            let nb: f64 = (0..n).filter(|&u| a[v][u] > 0.0).map(|u| deg[u]).sum();
            entropy(shares) * deg[v] / nb
        })
        .collect()
}

/// Dense weighted PageRank with uniform teleport and dangling mass spread
/// uniformly, iterated to a fixed point.
pub fn pagerank(a: &[Vec<f64>], damping: f64) -> Vec<f64> {
    let n = a.len();
    let deg = degree(a);
    let mut r = vec![1.0 / n as f64; n];
    for _ in 0..100_000 {
        let dangling: f64 = (0..n).filter(|&v| deg[v] == 0.0).map(|v| r[v]).sum();
        let next: Vec<f64> = (0..n)
            .map(|v| {
                let flow: f64 = (0..n).filter(|&u| deg[u] > 0.0).map(|u| r[u] * a[u][v] / deg[u]).sum();
                (1.0 - damping) / n as f64 + damping * (flow + dangling / n as f64)
            })
            .collect();
        let change: f64 = next.iter().zip(&r).map(|(x, y)| (x - y).abs()).sum();
        r = next;
        if change < 1e-15 {
            break;
        }
    }
    r
}

/// `A + I` and `D^{-1/2} (A + I) D^{-1/2}` as dense matrices.
pub fn operators(a: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut tilde = a.to_vec();
    for (i, row) in tilde.iter_mut().enumerate() {
        row[i] += 1.0;
    }
    let d: Vec<f64> = tilde.iter().map(|r| r.iter().sum()).collect();
    let hat = (0..n)
        .map(|i| (0..n).map(|j| tilde[i][j] / (d[i] * d[j]).sqrt()).collect())
        .collect();
    (tilde, hat)
}

pub fn matmul(a: &[Vec<f64>], h: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = h.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..k)
                .map(|j| row.iter().zip(h).map(|(x, hr)| x * hr[j]).sum())
                .collect()
        })
        .collect()
}

/// Solves the least-squares problem with an intercept through the normal
/// equations; returns `(weights, intercept)`.
pub fn ols(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let d = x[0].len() + 1;
    let rows: Vec<Vec<f64>> = x.iter().map(|r| r.iter().copied().chain([1.0]).collect()).collect();
    let mut m = vec![vec![0.0; d + 1]; d];
    for (r, &t) in rows.iter().zip(y) {
        for i in 0..d {
            for j in 0..d {
                m[i][j] += r[i] * r[j];
            }
            m[i][d] += r[i] * t;
        }
    }
    for c in 0..d {
        let p = (c..d).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        m.swap(c, p);
        for r in 0..d {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..=d {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    let beta: Vec<f64> = (0..d).map(|i| m[i][d] / m[i][i]).collect();
    (beta[..d - 1].to_vec(), beta[d - 1])
}
