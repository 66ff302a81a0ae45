use std::cmp::Ordering;

use rayon::prelude::*;

use super::CsGraph;
use crate::error::{Error, Result};
use crate::nn::{cmp_rows, Tensor2};

/// Which propagation matrix an [`AdjacencyOperator`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    /// `Ã = A + I`: weighted adjacency with unit self-loops.
    SelfLoops,
    /// `Â = D̃^{-1/2} Ã D̃^{-1/2}` with `D̃_ii = Σ_j Ã_ij`.
    Normalized,
}

/// Sparse symmetric propagation matrix in CSR form, diagonal included.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyOperator {
    kind: OperatorKind,
    offsets: Vec<usize>,
    cols: Vec<u32>,
    coefs: Vec<f64>,
}

impl AdjacencyOperator {
    pub fn new(g: &CsGraph, kind: OperatorKind) -> Self {
        let n = g.num_vertices();
        let nnz = g.offsets()[n] + n;
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut coefs = Vec::with_capacity(nnz);
        offsets.push(0);
        for v in 0..n {
            let mut self_done = false;
            for (&u, &w) in g.neighbors(v).iter().zip(g.weights(v)) {
                if !self_done && u as usize > v {
                    cols.push(v as u32);
                    coefs.push(1.0);
                    self_done = true;
                }
                cols.push(u);
                coefs.push(w);
            }
            if !self_done {
                cols.push(v as u32);
                coefs.push(1.0);
            }
            offsets.push(cols.len());
        }
        let op = AdjacencyOperator {
            kind: OperatorKind::SelfLoops,
            offsets,
            cols,
            coefs,
        };
        match kind {
            OperatorKind::SelfLoops => op,
            OperatorKind::Normalized => op.symmetric_normalized(),
        }
    }

    /// `D^{-1/2} M D^{-1/2}` where `D` holds the row sums of this matrix.
    ///
    /// Multiplying every coefficient by the same constant before normalising
    /// leaves the result unchanged. Row sums are reduced in sorted order so
    /// they do not depend on vertex labels.
    pub fn symmetric_normalized(&self) -> AdjacencyOperator {
        let n = self.dim();
        let row_sum: Vec<f64> = (0..n)
            .map(|v| {
                let mut row: Vec<f64> = self.coefs[self.offsets[v]..self.offsets[v + 1]].to_vec();
                row.sort_by(f64::total_cmp);
                row.iter().sum()
            })
            .collect();
        let mut coefs = self.coefs.clone();
        for v in 0..n {
            for k in self.offsets[v]..self.offsets[v + 1] {
                let denom = row_sum[v] * row_sum[self.cols[k] as usize];
                coefs[k] = if denom > 0.0 { coefs[k] / denom.sqrt() } else { 0.0 };
            }
        }
        AdjacencyOperator {
            kind: OperatorKind::Normalized,
            offsets: self.offsets.clone(),
            cols: self.cols.clone(),
            coefs,
        }
    }

    /// Copy with every coefficient (diagonal included) multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> AdjacencyOperator {
        AdjacencyOperator {
            coefs: self.coefs.iter().map(|c| c * factor).collect(),
            ..self.clone()
        }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// `(column, coefficient)` pairs of row `i`, columns ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.coefs[r])
            .map(|(&c, &w)| (c as usize, w))
    }

    /// Dense copy, for tests and small graphs.
    pub fn to_dense(&self) -> Tensor2 {
        let n = self.dim();
        let mut t = Tensor2::zeros(n, n);
        for i in 0..n {
            for (j, c) in self.row(i) {
                t.set(i, j, c);
            }
        }
        t
    }
}

/// Builds the requested operator for `g`.
pub fn normalized_operator(g: &CsGraph, kind: OperatorKind) -> AdjacencyOperator {
    AdjacencyOperator::new(g, kind)
}

const PAR_MIN_ROWS: usize = 128;

/// Sparse–dense product `op · h`.
///
/// Row `i` of the result is `Σ_j op_ij · h_j`. Terms within a row are
/// accumulated in an order determined by `(op_ij, h_j)` alone, so relabelling
/// the vertices permutes the output rows without changing a single bit.
pub fn spmm(op: &AdjacencyOperator, h: &Tensor2) -> Result<Tensor2> {
    let n = op.dim();
    if h.rows() != n {
        return Err(Error::Shape(format!(
            "spmm: operator is {n}x{n}, features have {} rows",
            h.rows()
        )));
    }
    let d = h.cols();
    let mut out = Tensor2::zeros(n, d);
    if d == 0 {
        return Ok(out);
    }
    let kernel = |(i, out_row): (usize, &mut [f64])| {
        let lo = op.offsets[i];
        let hi = op.offsets[i + 1];
        let mut order: Vec<usize> = (lo..hi).collect();
        if order.len() > 1 {
            order.sort_by(|&a, &b| {
                match op.coefs[a].total_cmp(&op.coefs[b]) {
                    Ordering::Equal => {}
                    o => return o,
                }
                cmp_rows(h.row(op.cols[a] as usize), h.row(op.cols[b] as usize))
            });
        }
        for k in order {
            let c = op.coefs[k];
            for (o, &x) in out_row.iter_mut().zip(h.row(op.cols[k] as usize)) {
                *o += c * x;
            }
        }
    };
    if n >= PAR_MIN_ROWS {
        out.data_mut().par_chunks_mut(d).enumerate().for_each(kernel);
    } else {
        out.data_mut().chunks_mut(d).enumerate().for_each(kernel);
    }
    Ok(out)
}
