use super::corpus::Corpus;
use super::skipgram::EmbeddingTable;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::nn::{cmp_rows, Tensor2};

/// Sums rows after sorting them, so the result ignores input order.
fn sum_sorted(mut rows: Vec<Vec<f64>>, dim: usize) -> Vec<f64> {
    rows.sort_by(|a, b| cmp_rows(a, b));
    let mut acc = vec![0.0; dim];
    for r in &rows {
        for (a, v) in acc.iter_mut().zip(r) {
            *a += v;
        }
    }
    acc
}

fn check_table(c: &Corpus, e: &EmbeddingTable) -> Result<()> {
    if e.tokens() != c.vocabulary().tokens() {
        return Err(Error::Shape("embedding table does not match the corpus vocabulary".into()));
    }
    Ok(())
}

fn author_vector(c: &Corpus, e: &EmbeddingTable, i: usize) -> Vec<f64> {
    let dim = e.dim();
    let docs = c.docs(i);
    let means: Vec<Vec<f64>> = docs
        .iter()
        .map(|doc| {
            let mut ids: Vec<u32> = doc.iter().flatten().copied().collect();
            if ids.is_empty() {
                return vec![0.0; dim];
            }
            ids.sort_unstable();
            let n = ids.len() as f64;
            let mut acc = vec![0.0; dim];
            for &w in &ids {
                for (a, v) in acc.iter_mut().zip(e.input_vector(w)) {
                    *a += v;
                }
            }
            acc.iter().map(|v| v / n).collect()
        })
        .collect();
    let n = docs.len() as f64;
    sum_sorted(means, dim).into_iter().map(|v| v / n).collect()
}

/// Mean over the author's documents of the mean in-vocabulary word vector.
/// A document without in-vocabulary tokens contributes a zero vector.
pub fn embed_author(c: &Corpus, e: &EmbeddingTable, author: &str) -> Result<Vec<f64>> {
    check_table(c, e)?;
    let i = c
        .author_index(author)
        .ok_or_else(|| Error::Lookup(format!("author {author} not in corpus")))?;
    Ok(author_vector(c, e, i))
}

/// Text features of every corpus author, columns `text_0 .. text_{d-1}`.
pub fn embed_all(c: &Corpus, e: &EmbeddingTable) -> Result<FeatureMatrix> {
    check_table(c, e)?;
    let dim = e.dim();
    let n = c.authors().len();
    let mut values = Tensor2::zeros(n, dim);
    for i in 0..n {
        values.row_mut(i).copy_from_slice(&author_vector(c, e, i));
    }
    let columns = (0..dim).map(|k| format!("text_{k}")).collect();
    FeatureMatrix::new(c.authors().to_vec(), columns, values)
}
