//! Train / validation / test partition of the labelled authors.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::config::SplitConfig;

/// Disjoint row-index sets, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Sizes `(train, val, test)` for `n` labelled authors.
pub fn split_sizes(n: usize, cfg: &SplitConfig) -> (usize, usize, usize) {
    let portion = (n as f64 * cfg.train_fraction).round() as usize;
    let val = (portion as f64 * cfg.val_fraction).round() as usize;
    (portion - val, val, n - portion)
}

/// Seeded split of `labeled`.
///
/// The uniform split shuffles once and cuts. The stratified split orders
/// authors by `strata` (ties broken at random) and takes evenly spaced
/// positions, so every label range is represented proportionally.
pub fn split(labeled: &[usize], strata: Option<&[f64]>, cfg: &SplitConfig, seed: u64) -> Result<Split> {
    let n = labeled.len();
    let (n_train, n_val, n_test) = split_sizes(n, cfg);
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(Error::Validation(format!(
            "{n} labelled authors give an empty split ({n_train}/{n_val}/{n_test})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = if cfg.stratified {
        let strata = strata.ok_or_else(|| Error::Config("stratified split needs labels".into()))?;
        let mut order: Vec<(f64, u64, usize)> = labeled.iter().map(|&i| (strata[i], rng.random(), i)).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let ordered: Vec<usize> = order.into_iter().map(|t| t.2).collect();
        let (portion, test) = spaced(&ordered, n_train + n_val);
        let (val, train) = spaced(&portion, n_val);
        Split { train, val, test }
    } else {
        let mut ids = labeled.to_vec();
        ids.shuffle(&mut rng);
        let test = ids.split_off(n_train + n_val);
        let train = ids.split_off(n_val);
        Split { train, val: ids, test }
    };
    s.train.sort_unstable();
    s.val.sort_unstable();
    s.test.sort_unstable();
    Ok(s)
}

/// Picks `k` evenly spaced elements of `xs`; returns `(picked, rest)`.
fn spaced(xs: &[usize], k: usize) -> (Vec<usize>, Vec<usize>) {
    let n = xs.len();
    let mut take = vec![false; n];
    for j in 0..k {
        take[((j as f64 + 0.5) * n as f64 / k as f64) as usize] = true;
    }
    let (mut a, mut b) = (Vec::with_capacity(k), Vec::with_capacity(n - k));
    for (&x, t) in xs.iter().zip(take) {
        if t {
            a.push(x)
        } else {
            b.push(x)
        }
    }
    (a, b)
}

impl Split {
    /// One `author_id <TAB> {train|val|test}` line per split member.
    pub fn to_tsv(&self, ids: &[String]) -> String {
        let mut rows: Vec<(usize, &str)> = self
            .train
            .iter()
            .map(|&i| (i, "train"))
            .chain(self.val.iter().map(|&i| (i, "val")))
            .chain(self.test.iter().map(|&i| (i, "test")))
            .collect();
        rows.sort_unstable();
        let mut s = String::from("author_id\tset\n");
        for (i, set) in rows {
            let _ = writeln!(s, "{}\t{set}", ids[i]);
        }
        s
    }
}

/// Membership read back from [`Split::to_tsv`] output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitSet {
    Train,
    Val,
    Test,
}

impl std::str::FromStr for SplitSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitSet::Train),
            "val" => Ok(SplitSet::Val),
            "test" => Ok(SplitSet::Test),
            other => Err(Error::Config(format!("unknown split set {other:?}"))),
        }
    }
}

pub fn parse_split(text: &str, source: &str) -> Result<Vec<(String, SplitSet)>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || (k == 0 && t.starts_with("author_id")) {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: source.to_string(),
            line: k + 1,
            msg,
        };
        let (id, set) = t.split_once('\t').ok_or_else(|| err("expected `author_id<TAB>set`".into()))?;
        let set = set.trim().parse().map_err(|e: Error| err(e.to_string()))?;
        out.push((id.to_string(), set));
    }
    Ok(out)
}
