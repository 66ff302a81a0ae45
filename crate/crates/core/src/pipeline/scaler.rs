//! Per-column standardisation fitted on training rows.

use std::path::Path;

use crate::binio::{self, Reader, Writer};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::nn::Tensor2;

const MAGIC: &[u8; 4] = b"HXSC";
const VERSION: u32 = 1;

/// Columns with a standard deviation below this are mapped to 0.
pub const DEGENERATE_STD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub columns: Vec<String>,
    pub mean: Vec<f64>,
    /// Population standard deviation of the fitted rows.
    pub std: Vec<f64>,
    pub degenerate: Vec<bool>,
}

impl Scaler {
    pub fn fit(x: &FeatureMatrix, rows: &[usize]) -> Result<Scaler> {
        if rows.is_empty() {
            return Err(Error::Validation("scaler needs at least one row".into()));
        }
        let v = x.values();
        let d = v.cols();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for &i in rows {
            for (m, x) in mean.iter_mut().zip(v.row(i)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for &i in rows {
            for ((s, x), m) in var.iter_mut().zip(v.row(i)).zip(&mean) {
                *s += (x - m) * (x - m);
            }
        }
        let std: Vec<f64> = var.iter().map(|s| (s / n).sqrt()).collect();
        let degenerate = std.iter().map(|&s| !(s >= DEGENERATE_STD)).collect();
        Ok(Scaler {
            columns: x.columns().to_vec(),
            mean,
            std,
            degenerate,
        })
    }

    pub fn transform(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.columns() != self.columns.as_slice() {
            return Err(Error::Shape("feature columns differ from the fitted scaler".into()));
        }
        let v = x.values();
        let out = Tensor2::from_fn(v.rows(), v.cols(), |i, j| {
            if self.degenerate[j] {
                0.0
            } else {
                (v.get(i, j) - self.mean[j]) / self.std[j]
            }
        });
        FeatureMatrix::new(x.ids().to_vec(), self.columns.clone(), out)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(MAGIC, VERSION);
        w.strs(&self.columns);
        w.f64s(&self.mean);
        w.f64s(&self.std);
        w.u32s(&self.degenerate.iter().map(|&b| b as u32).collect::<Vec<_>>());
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Scaler> {
        let (mut r, version) = Reader::open(bytes, MAGIC, "scaler")?;
        binio::expect_version(version, VERSION, "scaler")?;
        let columns = r.strs()?;
        let mean = r.f64s()?;
        let std = r.f64s()?;
        let degenerate: Vec<bool> = r.u32s()?.into_iter().map(|b| b != 0).collect();
        r.finish()?;
        let d = columns.len();
        if mean.len() != d || std.len() != d || degenerate.len() != d {
            return Err(Error::format("scaler", "column counts disagree"));
        }
        Ok(Scaler {
            columns,
            mean,
            std,
            degenerate,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Scaler> {
        Scaler::from_bytes(&binio::read_file(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
        let ids = (0..rows.len()).map(|i| format!("a{i}")).collect();
        let cols = (0..rows[0].len()).map(|j| format!("c{j}")).collect();
        FeatureMatrix::new(ids, cols, Tensor2::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn constant_column_is_degenerate() {
        let x = matrix(&[vec![3.0, 1.0], vec![3.0, 2.0], vec![3.0, 6.0]]);
        let s = Scaler::fit(&x, &[0, 1, 2]).unwrap();
        assert_eq!(s.degenerate, vec![true, false]);
        let t = s.transform(&x).unwrap();
        assert_eq!(t.values().col_values(0), vec![0.0; 3]);
    }

    #[test]
    fn train_rows_are_standardised() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![i as f64 * 0.37 + 5.0, ((i * 7) % 11) as f64 * 1e3, (i as f64).sin()])
            .collect();
        let x = matrix(&rows);
        let train: Vec<usize> = (0..40).step_by(3).collect();
        let t = Scaler::fit(&x, &train).unwrap().transform(&x).unwrap();
        for j in 0..3 {
            let col: Vec<f64> = train.iter().map(|&i| t.values().get(i, j)).collect();
            let m = col.iter().sum::<f64>() / col.len() as f64;
            let v = col.iter().map(|c| (c - m) * (c - m)).sum::<f64>() / col.len() as f64;
            assert!(m.abs() < 1e-9 && (v - 1.0).abs() < 1e-6, "column {j}: {m} {v}");
        }
    }

    #[test]
    fn test_rows_do_not_leak_into_statistics() {
        let mut rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let train = [0, 2, 4, 6];
        let a = Scaler::fit(&matrix(&rows), &train).unwrap();
        for r in [1, 3, 9] {
            rows[r] = vec![1e9, -1e9];
        }
        assert_eq!(Scaler::fit(&matrix(&rows), &train).unwrap(), a);
    }

    #[test]
    fn persistence_is_bit_exact_and_not_idempotent() {
        let x = matrix(&[vec![0.1, 9.0], vec![0.7, 3.0], vec![0.3, 1.0]]);
        let s = Scaler::fit(&x, &[0, 1]).unwrap();
        let back = Scaler::from_bytes(&s.to_bytes()).unwrap();
        assert_eq!(back, s);
        let once = s.transform(&x).unwrap();
        assert_eq!(back.transform(&x).unwrap(), once);
        assert_ne!(s.transform(&once).unwrap(), once);
    }

    #[test]
    fn empty_rows_and_wrong_columns() {
        let x = matrix(&[vec![1.0]]);
        assert!(Scaler::fit(&x, &[]).is_err());
        let s = Scaler::fit(&x, &[0]).unwrap();
        let y = FeatureMatrix::new(vec!["a".into()], vec!["other".into()], Tensor2::zeros(1, 1)).unwrap();
        assert!(s.transform(&y).is_err());
    }
}
