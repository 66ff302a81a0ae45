//! Labels, feature assembly and the dataset a run trains on.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::CsGraph;
use crate::nn::Tensor2;

use super::config::FeatureMode;

/// Per-author h-index values read from a label file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Labels {
    /// Date of the snapshot the values were taken from, when recorded.
    pub snapshot: Option<String>,
    entries: Vec<(String, u64)>,
    index: HashMap<String, usize>,
}

impl Labels {
    pub fn from_entries(entries: Vec<(String, u64)>) -> Result<Labels> {
        let mut index = HashMap::with_capacity(entries.len());
        for (k, (id, _)) in entries.iter().enumerate() {
            if index.insert(id.clone(), k).is_some() {
                return Err(Error::Validation(format!("author {id} labelled twice")));
            }
        }
        Ok(Labels {
            snapshot: None,
            entries,
            index,
        })
    }

    /// Parses `author_id <TAB> h_index` lines.
    ///
    /// A `# snapshot: <date>` comment records the snapshot; other `#` lines
    /// and an `author_id` header are skipped.
    pub fn parse(text: &str, source: &str) -> Result<Labels> {
        let mut snapshot = None;
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |msg: String| Error::Parse {
                path: source.to_string(),
                line: k + 1,
                msg,
            };
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(date) = comment.trim().strip_prefix("snapshot:") {
                    snapshot = Some(date.trim().to_string());
                }
                continue;
            }
            let mut parts = line.split('\t');
            let (Some(id), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err("expected `author_id<TAB>h_index`".into()));
            };
            let (id, value) = (id.trim(), value.trim());
            if entries.is_empty() && id == "author_id" {
                continue;
            }
            let h: u64 = value
                .parse()
                .map_err(|_| err(format!("h-index {value:?} is not a non-negative integer")))?;
            if id.is_empty() {
                return Err(err("empty author id".into()));
            }
            if !seen.insert(id.to_string()) {
                return Err(err(format!("author {id} labelled twice")));
            }
            entries.push((id.to_string(), h));
        }
        let mut labels = Labels::from_entries(entries)?;
        labels.snapshot = snapshot;
        Ok(labels)
    }

    pub fn load(path: &Path) -> Result<Labels> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Labels::parse(&text, &path.display().to_string())
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        if let Some(d) = &self.snapshot {
            let _ = writeln!(s, "# snapshot: {d}");
        }
        s.push_str("author_id\th_index\n");
        for (id, h) in &self.entries {
            let _ = writeln!(s, "{id}\t{h}");
        }
        s
    }

    pub fn get(&self, id: &str) -> Option<u64> {
        self.index.get(id).map(|&k| self.entries[k].1)
    }

    pub fn entries(&self) -> &[(String, u64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.1).collect()
    }
}

/// Builds the feature matrix for `mode`.
///
/// Rows follow the order of the graph features when present, else the text
/// features. Authors missing from a required source are dropped and returned
/// in the second element. Text columns precede graph columns in mode `all`.
pub fn assemble_features(
    mode: FeatureMode,
    text: Option<&FeatureMatrix>,
    metrics: Option<&FeatureMatrix>,
) -> Result<(FeatureMatrix, Vec<String>)> {
    fn need<'a>(m: Option<&'a FeatureMatrix>, mode: FeatureMode, what: &str) -> Result<&'a FeatureMatrix> {
        m.ok_or_else(|| Error::Config(format!("feature set {mode} needs {what} features")))
    }
    let sources: Vec<&FeatureMatrix> = match mode {
        FeatureMode::Text => vec![need(text, mode, "text")?],
        FeatureMode::Graph => vec![need(metrics, mode, "graph")?],
        FeatureMode::All => vec![need(text, mode, "text")?, need(metrics, mode, "graph")?],
    };
    let order = sources.last().expect("at least one source");
    let sets: Vec<HashSet<&str>> = sources
        .iter()
        .map(|s| s.ids().iter().map(String::as_str).collect())
        .collect();
    let keep: Vec<String> = order
        .ids()
        .iter()
        .filter(|id| sets.iter().all(|s| s.contains(id.as_str())))
        .cloned()
        .collect();
    let kept: HashSet<&str> = keep.iter().map(String::as_str).collect();
    let mut excluded: Vec<String> = sources
        .iter()
        .flat_map(|s| s.ids().iter())
        .filter(|id| !kept.contains(id.as_str()))
        .cloned()
        .collect();
    excluded.sort();
    excluded.dedup();
    if keep.is_empty() {
        return Err(Error::Validation("no author is present in every feature source".into()));
    }
    if !excluded.is_empty() {
        log::warn!("{} authors lack {mode} features in some source and were excluded", excluded.len());
    }
    let parts: Vec<FeatureMatrix> = sources.iter().map(|s| s.reindexed(&keep)).collect::<Result<_>>()?;
    let columns: Vec<String> = parts.iter().flat_map(|p| p.columns().iter().cloned()).collect();
    let values = Tensor2::hcat(&parts.iter().map(|p| p.values()).collect::<Vec<_>>())?;
    Ok((FeatureMatrix::new(keep, columns, values)?, excluded))
}

/// Graph, features and labels restricted to one author universe.
#[derive(Debug, Clone)]
pub struct Dataset {
    graph: CsGraph,
    text: Option<FeatureMatrix>,
    metrics: Option<FeatureMatrix>,
    labels: Vec<Option<f64>>,
    excluded: Vec<String>,
}

impl Dataset {
    /// Keeps the graph vertices that every given feature source covers.
    ///
    /// Metrics are expected to come from the full graph; the graph itself is
    /// then cut down to the kept authors. Labels of unknown authors are
    /// ignored.
    pub fn new(
        graph: &CsGraph,
        metrics: Option<FeatureMatrix>,
        text: Option<FeatureMatrix>,
        labels: &Labels,
    ) -> Result<Dataset> {
        if metrics.is_none() && text.is_none() {
            return Err(Error::Config("a dataset needs text or graph features".into()));
        }
        let sets: Vec<HashSet<&str>> = [metrics.as_ref(), text.as_ref()]
            .into_iter()
            .flatten()
            .map(|m| m.ids().iter().map(String::as_str).collect())
            .collect();
        let ids: Vec<String> = graph
            .ids()
            .iter()
            .filter(|id| sets.iter().all(|s| s.contains(id.as_str())))
            .cloned()
            .collect();
        if ids.is_empty() {
            return Err(Error::Validation("no author is present in every source".into()));
        }
        let kept: HashSet<&str> = ids.iter().map(String::as_str).collect();
        let mut excluded: Vec<String> = graph
            .ids()
            .iter()
            .chain(text.iter().flat_map(|t| t.ids()))
            .filter(|id| !kept.contains(id.as_str()))
            .cloned()
            .collect();
        excluded.sort();
        excluded.dedup();
        if !excluded.is_empty() {
            log::warn!("{} authors are missing from some source and were excluded", excluded.len());
        }
        let unknown = labels.entries().iter().filter(|(id, _)| !kept.contains(id.as_str())).count();
        if unknown > 0 {
            log::warn!("{unknown} labelled authors are not in the dataset");
        }
        let sub = if ids.len() == graph.num_vertices() {
            graph.clone()
        } else {
            graph.induced_subgraph(&ids)?
        };
        let labels = ids.iter().map(|id| labels.get(id).map(|h| h as f64)).collect();
        Ok(Dataset {
            text: text.map(|t| t.reindexed(&ids)).transpose()?,
            metrics: metrics.map(|m| m.reindexed(&ids)).transpose()?,
            graph: sub,
            labels,
            excluded,
        })
    }

    pub fn ids(&self) -> &[String] {
        self.graph.ids()
    }

    pub fn num_vertices(&self) -> usize {
        self.graph.num_vertices()
    }

    pub fn graph(&self) -> &CsGraph {
        &self.graph
    }

    pub fn labels(&self) -> &[Option<f64>] {
        &self.labels
    }

    pub fn excluded(&self) -> &[String] {
        &self.excluded
    }

    /// Row indices that carry a label, ascending.
    pub fn labeled(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i].is_some()).collect()
    }

    /// Label vector with unlabeled rows set to 0 (they never enter a loss).
    pub fn targets(&self) -> Vec<f64> {
        self.labels.iter().map(|l| l.unwrap_or(0.0)).collect()
    }

    pub fn available_modes(&self) -> Vec<FeatureMode> {
        FeatureMode::ALL
            .iter()
            .copied()
            .filter(|&m| self.features(m).is_ok())
            .collect()
    }

    pub fn features(&self, mode: FeatureMode) -> Result<FeatureMatrix> {
        let (f, excluded) = assemble_features(mode, self.text.as_ref(), self.metrics.as_ref())?;
        debug_assert!(excluded.is_empty());
        if let Some(i) = self.labeled().into_iter().find(|&i| !f.values().row(i).iter().all(|v| v.is_finite())) {
            return Err(Error::Validation(format!("author {} has non-finite features", self.ids()[i])));
        }
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::LoadOptions;

    fn fm(ids: &[&str], cols: &[&str], v: f64) -> FeatureMatrix {
        let values = Tensor2::from_fn(ids.len(), cols.len(), |i, j| v + (i * 10 + j) as f64);
        FeatureMatrix::new(
            ids.iter().map(|s| s.to_string()).collect(),
            cols.iter().map(|s| s.to_string()).collect(),
            values,
        )
        .unwrap()
    }

    #[test]
    fn label_file_parses() {
        let l = Labels::parse("# snapshot: 2019-06-01\nauthor_id\th_index\na\t3\nb\t0\n", "y").unwrap();
        assert_eq!(l.snapshot.as_deref(), Some("2019-06-01"));
        assert_eq!(l.get("a"), Some(3));
        assert_eq!(l.get("z"), None);
        assert_eq!(Labels::parse(&l.to_tsv(), "y").unwrap(), l);
    }

    #[test]
    fn label_file_rejects_bad_values() {
        for bad in ["a\t-1\n", "a\t1.5\n", "a\tx\n", "a\n", "a\t1\na\t2\n"] {
            assert!(Labels::parse(bad, "y").is_err(), "{bad:?}");
        }
    }

    #[test]
    fn graph_mode_has_nine_columns() {
        let names = crate::metrics::METRIC_NAMES;
        let g = fm(&["a", "b"], &names, 0.0);
        let (f, ex) = assemble_features(FeatureMode::Graph, None, Some(&g)).unwrap();
        assert_eq!(f.num_cols(), 9);
        assert!(ex.is_empty());
    }

    #[test]
    fn all_mode_concatenates_and_reports_exclusions() {
        let text_cols: Vec<String> = (0..64).map(|k| format!("text_{k}")).collect();
        let text_refs: Vec<&str> = text_cols.iter().map(String::as_str).collect();
        let t = fm(&["c", "a", "x"], &text_refs, 100.0);
        let g = fm(&["a", "b", "c"], &crate::metrics::METRIC_NAMES, 0.0);
        let (f, ex) = assemble_features(FeatureMode::All, Some(&t), Some(&g)).unwrap();
        assert_eq!(f.num_cols(), 73);
        assert_eq!(f.ids(), &["a".to_string(), "c".to_string()]);
        assert_eq!(ex, vec!["b".to_string(), "x".to_string()]);
        assert_eq!(f.columns()[0], "text_0");
        assert_eq!(f.columns()[64], "degree");
        assert_eq!(f.values().get(1, 0), t.row_of("c").unwrap()[0]);
        assert_eq!(f.values().get(1, 64), g.row_of("c").unwrap()[0]);
    }

    #[test]
    fn disjoint_sources_are_an_error() {
        let t = fm(&["x"], &["text_0"], 0.0);
        let g = fm(&["a"], &["degree"], 0.0);
        assert!(matches!(
            assemble_features(FeatureMode::All, Some(&t), Some(&g)),
            Err(Error::Validation(_))
        ));
        assert!(assemble_features(FeatureMode::Text, None, Some(&g)).is_err());
    }

    #[test]
    fn dataset_restricts_graph_to_covered_authors() {
        let (g, _) = CsGraph::parse_edge_list("a b 1\nb c 2\nc d 1\n", "g", LoadOptions::default()).unwrap();
        let m = fm(&["a", "b", "c", "d"], &["degree"], 0.0);
        let t = fm(&["b", "c", "d", "q"], &["text_0"], 0.0);
        let labels = Labels::from_entries(vec![("c".into(), 4), ("a".into(), 1)]).unwrap();
        let d = Dataset::new(&g, Some(m), Some(t), &labels).unwrap();
        assert_eq!(d.ids(), &["b".to_string(), "c".to_string(), "d".to_string()]);
        assert_eq!(d.graph().num_edges(), 2);
        assert_eq!(d.labels(), &[None, Some(4.0), None]);
        assert_eq!(d.labeled(), vec![1]);
        assert_eq!(d.excluded(), &["a".to_string(), "q".to_string()]);
        assert_eq!(d.features(FeatureMode::All).unwrap().num_cols(), 2);
        assert_eq!(d.available_modes(), FeatureMode::ALL.to_vec());
    }
}
