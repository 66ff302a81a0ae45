use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};

/// Predictions from an outside system aligned to a list of authors.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalPredictions {
    /// One entry per requested author; `None` where the file has no value.
    pub values: Vec<Option<f64>>,
    pub missing: Vec<String>,
    /// Fraction of requested authors with a prediction.
    pub coverage: f64,
}

impl ExternalPredictions {
    /// Positions and values of the covered authors.
    pub fn covered(&self) -> (Vec<usize>, Vec<f64>) {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (i, v)))
            .unzip()
    }
}

/// Parses `author_id <TAB> value` lines. An optional first line starting
/// with `author_id` is a header.
pub fn parse_predictions(text: &str, source: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || (i == 0 && t.starts_with("author_id")) {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: source.to_string(),
            line: i + 1,
            msg,
        };
        let (id, value) = t.split_once('\t').ok_or_else(|| err("expected `author_id<TAB>value`".into()))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| err(format!("bad prediction {value:?}")))?;
        if !value.is_finite() {
            return Err(err("prediction is not finite".into()));
        }
        if !seen.insert(id.to_string()) {
            return Err(err(format!("duplicate author {id}")));
        }
        out.push((id.to_string(), value));
    }
    Ok(out)
}

/// Aligns predictions to `wanted`. Ids outside `known` are always an error;
/// authors of `wanted` without a prediction are an error unless
/// `allow_partial` is set.
pub fn align_predictions(
    records: &[(String, f64)],
    wanted: &[String],
    known: &HashSet<&str>,
    allow_partial: bool,
) -> Result<ExternalPredictions> {
    let alien: Vec<&str> = records
        .iter()
        .map(|(id, _)| id.as_str())
        .filter(|id| !known.contains(id))
        .collect();
    if !alien.is_empty() {
        return Err(Error::Lookup(format!("predictions for unknown authors: {}", alien.join(", "))));
    }
    let by_id: HashMap<&str, f64> = records.iter().map(|(id, v)| (id.as_str(), *v)).collect();
    let values: Vec<Option<f64>> = wanted.iter().map(|id| by_id.get(id.as_str()).copied()).collect();
    let missing: Vec<String> = wanted
        .iter()
        .zip(&values)
        .filter(|(_, v)| v.is_none())
        .map(|(id, _)| id.clone())
        .collect();
    if !missing.is_empty() && !allow_partial {
        let shown: Vec<&str> = missing.iter().take(10).map(String::as_str).collect();
        return Err(Error::Validation(format!(
            "{} authors lack a prediction (first: {}); pass --allow-partial to evaluate the covered subset",
            missing.len(),
            shown.join(", ")
        )));
    }
    let coverage = if wanted.is_empty() {
        1.0
    } else {
        (wanted.len() - missing.len()) as f64 / wanted.len() as f64
    };
    Ok(ExternalPredictions {
        values,
        missing,
        coverage,
    })
}

pub fn import_external_predictions(
    path: &Path,
    wanted: &[String],
    known: &HashSet<&str>,
    allow_partial: bool,
) -> Result<ExternalPredictions> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let records = parse_predictions(&text, &path.display().to_string())?;
    align_predictions(&records, wanted, known, allow_partial)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("a{i}")).collect()
    }

    #[test]
    fn full_coverage_in_requested_order() {
        let all = ids(4);
        let known: HashSet<&str> = all.iter().map(String::as_str).collect();
        let recs = parse_predictions("author_id\tpred\na3\t1.5\na1\t2\n", "p").unwrap();
        let wanted = vec!["a1".to_string(), "a3".to_string()];
        let p = align_predictions(&recs, &wanted, &known, false).unwrap();
        assert_eq!(p.values, vec![Some(2.0), Some(1.5)]);
        assert_eq!(p.coverage, 1.0);
    }

    #[test]
    fn alien_id_is_listed() {
        let all = ids(2);
        let known: HashSet<&str> = all.iter().map(String::as_str).collect();
        let recs = parse_predictions("a0\t1\nzz\t2\n", "p").unwrap();
        let err = align_predictions(&recs, &all, &known, true).unwrap_err();
        assert!(err.to_string().contains("zz"));
    }

    #[test]
    fn partial_coverage_needs_flag() {
        let all = ids(10);
        let known: HashSet<&str> = all.iter().map(String::as_str).collect();
        let text: String = (0..9).map(|i| format!("a{i}\t{i}\n")).collect();
        let recs = parse_predictions(&text, "p").unwrap();
        assert!(align_predictions(&recs, &all, &known, false).is_err());
        let p = align_predictions(&recs, &all, &known, true).unwrap();
        assert!((p.coverage - 0.9).abs() < 1e-12);
        assert_eq!(p.missing, vec!["a9"]);
        assert_eq!(p.covered().0.len(), 9);
    }

    #[test]
    fn malformed_lines() {
        assert!(parse_predictions("a\tx\n", "p").is_err());
        assert!(parse_predictions("a 1\n", "p").is_err());
        assert!(parse_predictions("a\t1\na\t2\n", "p").is_err());
    }
}
