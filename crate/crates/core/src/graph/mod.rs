//! Weighted undirected co-authorship graph in compressed sparse form.

mod operator;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use crate::binio::{self, Reader, Writer};
use crate::error::{Error, Result};

pub use operator::{normalized_operator, spmm, AdjacencyOperator, OperatorKind};

const CACHE_MAGIC: &[u8; 4] = b"HXGR";
const CACHE_VERSION: u32 = 1;

/// Immutable weighted undirected graph.
///
/// Every undirected edge is stored in both endpoint rows, neighbours within a
/// row are sorted ascending, there are no self-loops, and weights are
/// positive integers held as `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsGraph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    weights: Vec<f64>,
    ids: Vec<String>,
    index: HashMap<String, u32>,
}

/// Side information gathered while loading an edge list.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub records: usize,
    pub dropped_self_loops: usize,
    pub merged_records: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Replace every merged edge weight by 1.
    pub binarize: bool,
}

impl CsGraph {
    /// Builds a canonical graph from external ids and `(u, v, w)` records.
    ///
    /// Records referring to the same unordered pair are summed; self-loops are
    /// dropped and counted in the returned total.
    pub fn from_edges(ids: Vec<String>, edges: &[(u32, u32, f64)]) -> Result<(Self, usize)> {
        let n = ids.len();
        let mut index = HashMap::with_capacity(n);
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i as u32).is_some() {
                return Err(Error::Validation(format!("duplicate vertex id {id:?}")));
            }
        }
        let mut merged: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        let mut self_loops = 0;
        for &(u, v, w) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::Validation(format!("edge ({u},{v}) out of range for n={n}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::Validation(format!("edge ({u},{v}) has weight {w}")));
            }
            if u == v {
                self_loops += 1;
                continue;
            }
            *merged.entry((u.min(v), u.max(v))).or_insert(0.0) += w;
        }
        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for (&(u, v), &w) in &merged {
            adj[u as usize].push((v, w));
            adj[v as usize].push((u, w));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::with_capacity(2 * merged.len());
        let mut weights = Vec::with_capacity(2 * merged.len());
        offsets.push(0);
        for row in &mut adj {
            row.sort_unstable_by_key(|&(v, _)| v);
            for &(v, w) in row.iter() {
                neighbors.push(v);
                weights.push(w);
            }
            offsets.push(neighbors.len());
        }
        Ok((
            CsGraph {
                offsets,
                neighbors,
                weights,
                ids,
                index,
            },
            self_loops,
        ))
    }

    /// Vertex-only graph (no edges), ids given in index order.
    pub fn edgeless(ids: Vec<String>) -> Result<Self> {
        Ok(Self::from_edges(ids, &[])?.0)
    }

    /// Reads a whitespace-separated `src dst weight` edge list.
    ///
    /// Vertex indices follow first appearance in the file. Lines that are
    /// empty or start with `#` are skipped.
    pub fn load_edge_list(path: &Path, opts: LoadOptions) -> Result<(Self, LoadReport)> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_edge_list(&text, &path.display().to_string(), opts)
    }

    pub fn parse_edge_list(text: &str, source: &str, opts: LoadOptions) -> Result<(Self, LoadReport)> {
        let mut ids = Vec::new();
        let mut index: HashMap<String, u32> = HashMap::new();
        let mut edges = Vec::new();
        let mut report = LoadReport::default();
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: source.to_string(),
            line,
            msg,
        };
        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(parse_err(lineno, format!("expected `src dst weight`, got {} fields", fields.len())));
            }
            let w: f64 = fields[2]
                .parse()
                .map_err(|_| parse_err(lineno, format!("weight {:?} is not a number", fields[2])))?;
            if !(w > 0.0) {
                return Err(Error::Validation(format!("{source}:{lineno}: weight {w} must be positive")));
            }
            if w.fract() != 0.0 || !w.is_finite() {
                return Err(Error::Validation(format!("{source}:{lineno}: weight {w} is not an integer count")));
            }
            let mut idx = |name: &str| -> u32 {
                if let Some(&i) = index.get(name) {
                    return i;
                }
                let next = ids.len() as u32;
                ids.push(name.to_string());
                index.insert(name.to_string(), next);
                next
            };
            let u = idx(fields[0]);
            let v = idx(fields[1]);
            report.records += 1;
            edges.push((u, v, w));
        }
        let (mut g, self_loops) = CsGraph::from_edges(ids, &edges)?;
        report.dropped_self_loops = self_loops;
        report.merged_records = report.records - self_loops - g.num_edges();
        if self_loops > 0 {
            log::warn!("{source}: dropped {self_loops} self-loop record(s)");
        }
        if opts.binarize {
            g.weights.iter_mut().for_each(|w| *w = 1.0);
        }
        Ok((g, report))
    }

    #[inline]
    pub fn num_vertices(&self) -> usize {
        self.ids.len()
    }

    /// Number of undirected edges.
    #[inline]
    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn weights(&self, v: usize) -> &[f64] {
        &self.weights[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Unweighted degree `|N(v)|`.
    #[inline]
    pub fn num_neighbors(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Weighted degree: sum of incident edge weights.
    pub fn weighted_degree(&self, v: usize) -> f64 {
        self.weights(v).iter().sum()
    }

    pub fn edge_weight(&self, u: usize, v: usize) -> Option<f64> {
        let row = self.neighbors(u);
        row.binary_search(&(v as u32)).ok().map(|k| self.weights(u)[k])
    }

    /// Each undirected edge once, as `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.num_vertices()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .zip(self.weights(u))
                .filter(move |(&v, _)| (v as usize) > u)
                .map(move |(&v, &w)| (u, v as usize, w))
        })
    }

    pub fn total_weight(&self) -> f64 {
        self.edges().map(|(_, _, w)| w).sum()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, v: usize) -> &str {
        &self.ids[v]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).map(|&i| i as usize)
    }

    /// Copy with every edge weight replaced by 1.
    pub fn binarized(&self) -> CsGraph {
        let mut g = self.clone();
        g.weights.iter_mut().for_each(|w| *w = 1.0);
        g
    }

    /// Copy with every edge weight multiplied by `factor`.
    ///
    /// The result may hold non-integral weights; used to check scale
    /// invariance of weighted operators.
    pub fn scaled(&self, factor: f64) -> CsGraph {
        let mut g = self.clone();
        g.weights.iter_mut().for_each(|w| *w *= factor);
        g
    }

    /// Relabels vertices: old vertex `v` becomes new vertex `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<CsGraph> {
        let n = self.num_vertices();
        if perm.len() != n {
            return Err(Error::Shape(format!("permutation of length {} for n={n}", perm.len())));
        }
        let mut ids = vec![String::new(); n];
        let mut seen = vec![false; n];
        for (old, &new) in perm.iter().enumerate() {
            if new >= n || std::mem::replace(&mut seen[new], true) {
                return Err(Error::Validation("not a permutation".into()));
            }
            ids[new] = self.ids[old].clone();
        }
        let edges: Vec<(u32, u32, f64)> = self
            .edges()
            .map(|(u, v, w)| (perm[u] as u32, perm[v] as u32, w))
            .collect();
        Ok(Self::from_edges(ids, &edges)?.0)
    }

    /// Subgraph induced by `ids` (in that order); unknown ids are an error.
    pub fn induced_subgraph(&self, ids: &[String]) -> Result<CsGraph> {
        let mut new_of = vec![u32::MAX; self.num_vertices()];
        for (k, id) in ids.iter().enumerate() {
            let v = self
                .index_of(id)
                .ok_or_else(|| Error::Lookup(format!("vertex {id} not in graph")))?;
            if new_of[v] != u32::MAX {
                return Err(Error::Validation(format!("duplicate vertex {id}")));
            }
            new_of[v] = k as u32;
        }
        let edges: Vec<(u32, u32, f64)> = self
            .edges()
            .filter(|&(u, v, _)| new_of[u] != u32::MAX && new_of[v] != u32::MAX)
            .map(|(u, v, w)| (new_of[u], new_of[v], w))
            .collect();
        Ok(Self::from_edges(ids.to_vec(), &edges)?.0)
    }

    /// Serialises the CSR arrays and id map.
    pub fn to_cache_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(CACHE_MAGIC, CACHE_VERSION);
        w.strs(&self.ids);
        w.u64s(&self.offsets.iter().map(|&o| o as u64).collect::<Vec<_>>());
        w.u32s(&self.neighbors);
        w.f64s(&self.weights);
        w.finish()
    }

    pub fn from_cache_bytes(bytes: &[u8]) -> Result<CsGraph> {
        let (mut r, version) = Reader::open(bytes, CACHE_MAGIC, "graph cache")?;
        binio::expect_version(version, CACHE_VERSION, "graph cache")?;
        let ids = r.strs()?;
        let offsets: Vec<usize> = r.u64s()?.into_iter().map(|o| o as usize).collect();
        let neighbors = r.u32s()?;
        let weights = r.f64s()?;
        r.finish()?;
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        let g = CsGraph {
            offsets,
            neighbors,
            weights,
            ids,
            index,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn save_cache(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_cache_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load_cache(path: &Path) -> Result<CsGraph> {
        Self::from_cache_bytes(&binio::read_file(path)?)
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        let n = self.ids.len();
        let bad = |m: String| Err(Error::Validation(m));
        if self.index.len() != n {
            return bad("duplicate vertex ids".into());
        }
        if self.offsets.len() != n + 1 || self.offsets[0] != 0 || self.offsets[n] != self.neighbors.len() {
            return bad("offsets do not frame the neighbour array".into());
        }
        if self.weights.len() != self.neighbors.len() {
            return bad("weights and neighbours differ in length".into());
        }
        for v in 0..n {
            if self.offsets[v] > self.offsets[v + 1] {
                return bad(format!("offsets decrease at {v}"));
            }
            let row = self.neighbors(v);
            if row.windows(2).any(|p| p[0] >= p[1]) {
                return bad(format!("row {v} not strictly sorted"));
            }
            for (&u, &w) in row.iter().zip(self.weights(v)) {
                if u as usize >= n || u as usize == v {
                    return bad(format!("row {v} has invalid neighbour {u}"));
                }
                if !(w > 0.0) || !w.is_finite() {
                    return bad(format!("edge ({v},{u}) has weight {w}"));
                }
                if self.edge_weight(u as usize, v) != Some(w) {
                    return bad(format!("edge ({v},{u}) is not symmetric"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> (CsGraph, LoadReport) {
        CsGraph::parse_edge_list(s, "test", LoadOptions::default()).unwrap()
    }

    #[test]
    fn reverse_records_merge() {
        let (g, r) = parse("a b 2\nb a 1\n");
        assert_eq!(g.num_vertices(), 2);
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.edge_weight(0, 1), Some(3.0));
        assert_eq!(g.edge_weight(1, 0), Some(3.0));
        assert_eq!(r.merged_records, 1);
    }

    #[test]
    fn self_loop_dropped_vertex_kept() {
        let (g, r) = parse("a a 5\n");
        assert_eq!(g.num_vertices(), 1);
        assert_eq!(g.num_edges(), 0);
        assert_eq!(r.dropped_self_loops, 1);
    }

    #[test]
    fn path_graph_degrees() {
        let (g, _) = parse("# path\na b 1\nb c 1\n\nc d 1\n");
        assert_eq!(g.num_vertices(), 4);
        assert_eq!(g.num_edges(), 3);
        let deg: Vec<usize> = (0..4).map(|v| g.num_neighbors(v)).collect();
        assert_eq!(deg, vec![1, 2, 2, 1]);
        assert_eq!(g.ids(), &["a", "b", "c", "d"]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = CsGraph::parse_edge_list("a b 1\na b\n", "f", LoadOptions::default()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e:?}"),
        }
        let err = CsGraph::parse_edge_list("a b x\n", "f", LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn non_positive_or_fractional_weight_rejected() {
        for bad in ["a b 0\n", "a b -2\n", "a b 1.5\n"] {
            let err = CsGraph::parse_edge_list(bad, "f", LoadOptions::default()).unwrap_err();
            assert!(matches!(err, Error::Validation(_)), "{bad}: {err:?}");
        }
    }

    #[test]
    fn binarize_flag() {
        let (g, _) = CsGraph::parse_edge_list("a b 4\nb c 2\n", "f", LoadOptions { binarize: true }).unwrap();
        assert!(g.edges().all(|(_, _, w)| w == 1.0));
    }

    #[test]
    fn degree_sum_is_twice_weight() {
        let (g, _) = parse("a b 2\nb c 3\nc a 1\nd a 7\n");
        let deg_sum: f64 = (0..g.num_vertices()).map(|v| g.weighted_degree(v)).sum();
        assert_eq!(deg_sum, 2.0 * g.total_weight());
        g.validate().unwrap();
    }

    #[test]
    fn cache_round_trip_is_bit_exact() {
        let (g, _) = parse("a b 2\nb c 3\nc a 1\nd a 7\ne e 1\n");
        let bytes = g.to_cache_bytes();
        let h = CsGraph::from_cache_bytes(&bytes).unwrap();
        assert_eq!(g, h);
        assert_eq!(bytes, h.to_cache_bytes());
        let mut corrupt = bytes.clone();
        corrupt[4] = 9;
        assert!(matches!(CsGraph::from_cache_bytes(&corrupt), Err(Error::Format { .. })));
        assert!(CsGraph::from_cache_bytes(&bytes[..bytes.len() - 3]).is_err());
    }

    #[test]
    fn induced_subgraph_keeps_inner_edges() {
        let (g, _) = CsGraph::parse_edge_list("a b 2\nb c 1\nc d 3\n", "t", LoadOptions::default()).unwrap();
        let h = g.induced_subgraph(&["c".to_string(), "b".to_string(), "d".to_string()]).unwrap();
        assert_eq!(h.ids(), &["c", "b", "d"]);
        assert_eq!(h.num_edges(), 2);
        assert_eq!(h.edge_weight(0, 2), Some(3.0));
        assert!(g.induced_subgraph(&["zz".to_string()]).is_err());
    }

    #[test]
    fn permutation_preserves_structure() {
        let (g, _) = parse("a b 2\nb c 3\nc d 1\n");
        let p = g.permuted(&[3, 0, 2, 1]).unwrap();
        p.validate().unwrap();
        assert_eq!(p.id(3), "a");
        assert_eq!(p.edge_weight(3, 0), Some(2.0));
        assert_eq!(p.edge_weight(0, 2), Some(3.0));
        assert!(g.permuted(&[0, 0, 1, 2]).is_err());
    }
}
