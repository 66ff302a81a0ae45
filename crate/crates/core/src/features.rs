//! Row-per-author dense feature store with named columns.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::binio::{self, Reader, Writer};
use crate::error::{Error, Result};
use crate::nn::Tensor2;

const MAGIC: &[u8; 4] = b"HXFM";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    ids: Vec<String>,
    columns: Vec<String>,
    values: Tensor2,
}

impl FeatureMatrix {
    pub fn new(ids: Vec<String>, columns: Vec<String>, values: Tensor2) -> Result<Self> {
        if values.rows() != ids.len() || values.cols() != columns.len() {
            return Err(Error::Shape(format!(
                "feature matrix {:?} with {} ids and {} columns",
                values.shape(),
                ids.len(),
                columns.len()
            )));
        }
        Ok(FeatureMatrix { ids, columns, values })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn values(&self) -> &Tensor2 {
        &self.values
    }

    pub fn into_values(self) -> Tensor2 {
        self.values
    }

    pub fn num_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn num_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.values.col_values(j))
    }

    pub fn row_of(&self, id: &str) -> Option<&[f64]> {
        let i = self.ids.iter().position(|x| x == id)?;
        Some(self.values.row(i))
    }

    /// Rows reordered to follow `ids`; every id must be present.
    pub fn reindexed(&self, ids: &[String]) -> Result<FeatureMatrix> {
        let pos: HashMap<&str, usize> = self.ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let idx = ids
            .iter()
            .map(|id| pos.get(id.as_str()).copied().ok_or_else(|| Error::Lookup(id.clone())))
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureMatrix {
            ids: ids.to_vec(),
            columns: self.columns.clone(),
            values: self.values.select_rows(&idx),
        })
    }

    /// Tab-separated text: a header `author_id<TAB>col…` then one row per id.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("author_id");
        for c in &self.columns {
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
        for (i, id) in self.ids.iter().enumerate() {
            out.push_str(id);
            for v in self.values.row(i) {
                // `{}` prints the shortest representation that parses back exactly.
                write!(out, "\t{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_tsv(text: &str, source: &str) -> Result<FeatureMatrix> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            path: source.into(),
            line: 1,
            msg: "missing header".into(),
        })?;
        let mut head = header.split('\t');
        if head.next() != Some("author_id") {
            return Err(Error::Parse {
                path: source.into(),
                line: 1,
                msg: "header must start with author_id".into(),
            });
        }
        let columns: Vec<String> = head.map(str::to_string).collect();
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for (lineno, line) in lines {
            let mut fields = line.split('\t');
            let id = fields.next().unwrap_or_default().to_string();
            let before = data.len();
            for f in fields {
                let v: f64 = f.parse().map_err(|_| Error::Parse {
                    path: source.into(),
                    line: lineno + 1,
                    msg: format!("{f:?} is not a number"),
                })?;
                data.push(v);
            }
            if data.len() - before != columns.len() {
                return Err(Error::Parse {
                    path: source.into(),
                    line: lineno + 1,
                    msg: format!("expected {} values", columns.len()),
                });
            }
            ids.push(id);
        }
        let values = Tensor2::from_vec(ids.len(), columns.len(), data)?;
        FeatureMatrix::new(ids, columns, values)
    }

    pub fn save_tsv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn load_tsv(path: &Path) -> Result<FeatureMatrix> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tsv(&text, &path.display().to_string())
    }

    /// Binary columnar cache: ids, column names, then each column's values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(MAGIC, VERSION);
        w.strs(&self.ids);
        w.strs(&self.columns);
        for j in 0..self.num_cols() {
            w.f64s(&self.values.col_values(j));
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<FeatureMatrix> {
        let (mut r, version) = Reader::open(bytes, MAGIC, "feature cache")?;
        binio::expect_version(version, VERSION, "feature cache")?;
        let ids = r.strs()?;
        let columns = r.strs()?;
        let mut values = Tensor2::zeros(ids.len(), columns.len());
        for j in 0..columns.len() {
            let col = r.f64s()?;
            if col.len() != ids.len() {
                return Err(Error::format("feature cache", "column length mismatch"));
            }
            for (i, v) in col.into_iter().enumerate() {
                values.set(i, j, v);
            }
        }
        r.finish()?;
        FeatureMatrix::new(ids, columns, values)
    }

    pub fn save_bin(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load_bin(path: &Path) -> Result<FeatureMatrix> {
        Self::from_bytes(&binio::read_file(path)?)
    }
}
