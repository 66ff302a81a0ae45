//! Seeded synthetic co-authorship data for end-to-end runs.
//!
//! Degrees follow preferential attachment, edge weights are geometric
//! counts, and h-index labels grow with degree and core number. Abstracts
//! are drawn from topic vocabularies whose choice leans weakly on the label.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CsGraph;
use crate::metrics::core_numbers;
use crate::pipeline::Labels;

pub const EDGES_FILE: &str = "graph.edges";
pub const ABSTRACTS_FILE: &str = "abstracts.tsv";
pub const LABELS_FILE: &str = "labels.tsv";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    pub n: usize,
    /// Mean number of existing authors each newcomer links to.
    pub m_per_node: usize,
    pub seed: u64,
    pub topics: usize,
    pub words_per_topic: usize,
    pub background_words: usize,
    /// Probability that an author's topic is chosen by label rank rather
    /// than uniformly.
    pub topic_signal: f64,
    pub label_noise: f64,
}

impl SynthOptions {
    pub fn new(n: usize, m_per_node: usize, seed: u64) -> Self {
        SynthOptions {
            n,
            m_per_node,
            seed,
            topics: 8,
            words_per_topic: 40,
            background_words: 200,
            topic_signal: 0.3,
            label_noise: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub ids: Vec<String>,
    /// `(u, v, weight)` with `u < v`, in creation order.
    pub edges: Vec<(usize, usize, u64)>,
    pub abstracts: Vec<(String, String)>,
    pub labels: Labels,
}

pub fn generate_synthetic(opts: &SynthOptions) -> Result<SynthData> {
    let n = opts.n;
    let m = opts.m_per_node;
    if n < 10 {
        return Err(Error::Config(format!("synthetic graphs need at least 10 vertices, got {n}")));
    }
    if m == 0 || 2 * m >= n {
        return Err(Error::Config(format!("m_per_node {m} must be in 1..{}", n.div_ceil(2))));
    }
    if opts.topics == 0 || opts.words_per_topic == 0 || opts.background_words == 0 {
        return Err(Error::Config("vocabulary sizes must be positive".into()));
    }
    if !(0.0..=1.0).contains(&opts.topic_signal) || !(opts.label_noise >= 0.0) {
        return Err(Error::Config("topic_signal must be in [0, 1], label_noise non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let width = (n - 1).to_string().len();
    let ids: Vec<String> = (0..n).map(|i| format!("a{i:0width$}")).collect();

    // Preferential attachment: `ends` lists every edge endpoint, so a
    // uniform pick from it is degree-proportional.
    let weight = Geometric::new(0.5).expect("valid probability");
    let mut edges = Vec::new();
    let mut ends: Vec<usize> = Vec::new();
    let seed_size = m + 1;
    for v in 0..seed_size {
        for u in 0..v {
            edges.push((u, v, 1 + weight.sample(&mut rng)));
            ends.extend([u, v]);
        }
    }
    for v in seed_size..n {
        let k = rng.random_range(1..2 * m).min(v);
        let mut chosen = HashSet::with_capacity(k);
        while chosen.len() < k {
            chosen.insert(ends[rng.random_range(0..ends.len())]);
        }
        let mut chosen: Vec<usize> = chosen.into_iter().collect();
        chosen.sort_unstable();
        for u in chosen {
            edges.push((u, v, 1 + weight.sample(&mut rng)));
            ends.extend([u, v]);
        }
    }

    let mut degree = vec![0usize; n];
    for &(u, v, _) in &edges {
        degree[u] += 1;
        degree[v] += 1;
    }
    let graph_edges: Vec<(u32, u32, f64)> = edges.iter().map(|&(u, v, w)| (u as u32, v as u32, w as f64)).collect();
    let (g, _) = CsGraph::from_edges(ids.clone(), &graph_edges)?;
    let core = core_numbers(&g);
    let noise = Normal::new(0.0, opts.label_noise).map_err(|e| Error::Config(e.to_string()))?;
    let h: Vec<u64> = (0..n)
        .map(|v| {
            let signal = 2.0 * (degree[v] as f64).sqrt() + 0.5 * core[v] as f64 - 2.0;
            (signal + noise.sample(&mut rng)).round().max(0.0) as u64
        })
        .collect();

    // Topic of each author: by label rank with probability `topic_signal`.
    let mut rank: Vec<usize> = (0..n).collect();
    rank.sort_by_key(|&v| (h[v], v));
    let mut topic_by_rank = vec![0usize; n];
    for (r, &v) in rank.iter().enumerate() {
        topic_by_rank[v] = r * opts.topics / n;
    }
    let mut abstracts = Vec::new();
    for v in 0..n {
        let topic = if rng.random_bool(opts.topic_signal) {
            topic_by_rank[v]
        } else {
            rng.random_range(0..opts.topics)
        };
        let docs = rng.random_range(1..=3);
        for _ in 0..docs {
            let len = rng.random_range(15..=40);
            let mut text = String::new();
            for k in 0..len {
                if k > 0 {
                    text.push(' ');
                }
                if rng.random_bool(0.5) {
                    let _ = write!(text, "t{topic}w{}", rng.random_range(0..opts.words_per_topic));
                } else {
                    // Squaring a uniform draw skews background words towards low indices.
                    let r: f64 = rng.random();
                    let _ = write!(text, "w{}", (r * r * opts.background_words as f64) as usize);
                }
            }
            abstracts.push((ids[v].clone(), text));
        }
    }
    let mut labels = Labels::from_entries(ids.iter().cloned().zip(h).collect())?;
    labels.snapshot = Some("synthetic".into());
    Ok(SynthData {
        ids,
        edges,
        abstracts,
        labels,
    })
}

impl SynthData {
    pub fn edges_text(&self) -> String {
        let mut s = String::new();
        for &(u, v, w) in &self.edges {
            let _ = writeln!(s, "{} {} {w}", self.ids[u], self.ids[v]);
        }
        s
    }

    pub fn abstracts_text(&self) -> String {
        let mut s = String::new();
        for (a, t) in &self.abstracts {
            let _ = writeln!(s, "{a}\t{t}");
        }
        s
    }

    /// Writes the three data files into `dir` and returns their paths.
    pub fn write_to(&self, dir: &Path) -> Result<[PathBuf; 3]> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = [
            (dir.join(EDGES_FILE), self.edges_text()),
            (dir.join(ABSTRACTS_FILE), self.abstracts_text()),
            (dir.join(LABELS_FILE), self.labels.to_tsv()),
        ];
        for (p, text) in &files {
            std::fs::write(p, text).map_err(|e| Error::io(p, e))?;
        }
        Ok(files.map(|(p, _)| p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rerun_is_identical() {
        let a = generate_synthetic(&SynthOptions::new(1000, 4, 9)).unwrap();
        let b = generate_synthetic(&SynthOptions::new(1000, 4, 9)).unwrap();
        assert_eq!(a.edges_text(), b.edges_text());
        assert_eq!(a.abstracts_text(), b.abstracts_text());
        assert_eq!(a.labels.to_tsv(), b.labels.to_tsv());
        let c = generate_synthetic(&SynthOptions::new(1000, 4, 10)).unwrap();
        assert_ne!(a.edges_text(), c.edges_text());
    }

    #[test]
    fn too_small_is_rejected() {
        assert!(matches!(generate_synthetic(&SynthOptions::new(9, 2, 0)), Err(Error::Config(_))));
        assert!(generate_synthetic(&SynthOptions::new(10, 2, 0)).is_ok());
        assert!(generate_synthetic(&SynthOptions::new(10, 0, 0)).is_err());
    }

    #[test]
    fn files_parse_back() {
        let d = generate_synthetic(&SynthOptions::new(50, 2, 1)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let [e, a, l] = d.write_to(dir.path()).unwrap();
        let (g, _) = CsGraph::load_edge_list(&e, Default::default()).unwrap();
        assert_eq!(g.num_vertices(), 50);
        assert_eq!(g.num_edges(), d.edges.len());
        assert!(g.edges().all(|(_, _, w)| w >= 1.0 && w.fract() == 0.0));
        let labels = Labels::load(&l).unwrap();
        assert_eq!(labels.len(), 50);
        let text = std::fs::read_to_string(a).unwrap();
        assert_eq!(crate::text::Corpus::parse_records(&text, "a").unwrap().len(), d.abstracts.len());
    }
}
