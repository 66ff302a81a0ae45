//! Error metrics, per-author prediction tables and label histograms.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::nn::{mae_loss, mse_loss};

/// `(MAE, MSE)` of `pred` against `labels` over the rows in `mask`.
pub fn evaluate(pred: &[f64], labels: &[f64], mask: &[usize]) -> Result<(f64, f64)> {
    if mask.is_empty() {
        return Err(Error::Validation("cannot evaluate on an empty mask".into()));
    }
    if pred.len() != labels.len() {
        return Err(Error::Shape(format!("{} predictions for {} labels", pred.len(), labels.len())));
    }
    if let Some(&i) = mask.iter().find(|&&i| i >= pred.len()) {
        return Err(Error::Shape(format!("mask row {i} out of range")));
    }
    let p: Vec<f64> = mask.iter().map(|&i| pred[i]).collect();
    let y: Vec<f64> = mask.iter().map(|&i| labels[i]).collect();
    Ok((mae_loss(&p, &y)?.0, mse_loss(&p, &y)?.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedRow {
    pub author: String,
    pub actual: f64,
    pub predicted: Vec<f64>,
}

impl NamedRow {
    /// `actual | pred_1 | pred_2 ...` with predictions to two decimals.
    pub fn values_line(&self) -> String {
        let mut s = format!("{}", self.actual);
        for p in &self.predicted {
            let _ = write!(s, " | {p:.2}");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NamedTable {
    pub models: Vec<String>,
    pub rows: Vec<NamedRow>,
}

impl NamedTable {
    pub fn render(&self) -> String {
        let mut s = String::from("author | actual");
        for m in &self.models {
            let _ = write!(s, " | {m}");
        }
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{} | {}", r.author, r.values_line());
        }
        s
    }
}

/// Actual and predicted h-index for the requested authors.
///
/// Repeated ids are reported once, at their first position. Every id must
/// be a labelled member of `ids`.
pub fn report_named_predictions(
    wanted: &[String],
    ids: &[String],
    labels: &[Option<f64>],
    models: &[(String, Vec<f64>)],
) -> Result<NamedTable> {
    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    if let Some((name, p)) = models.iter().find(|(_, p)| p.len() != ids.len()) {
        return Err(Error::Shape(format!("{name}: {} predictions for {} authors", p.len(), ids.len())));
    }
    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for id in wanted {
        if !seen.insert(id.as_str()) {
            continue;
        }
        let &i = index
            .get(id.as_str())
            .ok_or_else(|| Error::Lookup(format!("author {id}")))?;
        let actual = labels[i].ok_or_else(|| Error::Validation(format!("author {id} has no label")))?;
        rows.push(NamedRow {
            author: id.clone(),
            actual,
            predicted: models.iter().map(|(_, p)| p[i]).collect(),
        });
    }
    Ok(NamedTable {
        models: models.iter().map(|(m, _)| m.clone()).collect(),
        rows,
    })
}

/// `(h-index, number of authors)` pairs in increasing h-index order.
pub fn label_distribution(labels: &[u64]) -> Vec<(u64, usize)> {
    let mut counts = BTreeMap::new();
    for &h in labels {
        *counts.entry(h).or_insert(0usize) += 1;
    }
    counts.into_iter().collect()
}

/// Histogram as TSV, headed by a hint to plot both axes logarithmically.
pub fn distribution_tsv(hist: &[(u64, usize)]) -> String {
    let mut s = String::from("# scale: log-log\nh_index\tcount\n");
    for (h, c) in hist {
        let _ = writeln!(s, "{h}\t{c}");
    }
    s
}
