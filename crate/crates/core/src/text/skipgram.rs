//! Skip-Gram with negative sampling.

use std::path::Path;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::corpus::{doc_pairs, Corpus};
use crate::binio::{self, Reader, Writer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial learning rate, decayed linearly over all updates.
    pub lr: f64,
    /// Floor of the decayed rate as a fraction of `lr`.
    pub min_lr_fraction: f64,
    /// Set from the run's root seed, not from configuration files.
    #[serde(skip)]
    pub seed: u64,
    /// 1 trains deterministically; more threads update the tables lock-free.
    pub workers: usize,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dim: 64,
            window: 5,
            negatives: 5,
            epochs: 5,
            lr: 0.025,
            min_lr_fraction: 1e-4,
            seed: 0,
            workers: 1,
        }
    }
}

impl SkipGramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        if self.negatives == 0 {
            return Err(Error::Config("at least one negative sample is required".into()));
        }
        if self.window == 0 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.lr)));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }
}

/// Input (word) and output (context) vectors, row-major per token.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    tokens: Vec<String>,
    input: Vec<f64>,
    output: Vec<f64>,
}

const MAGIC: &[u8; 4] = b"HXEM";
const VERSION: u32 = 1;

impl EmbeddingTable {
    /// Input vectors uniform in `±0.5/dim`, output vectors zero.
    pub fn initialize(tokens: Vec<String>, dim: usize, rng: &mut impl Rng) -> EmbeddingTable {
        let bound = 0.5 / dim as f64;
        let input = (0..tokens.len() * dim).map(|_| rng.random_range(-bound..bound)).collect();
        let output = vec![0.0; tokens.len() * dim];
        EmbeddingTable {
            dim,
            tokens,
            input,
            output,
        }
    }

    pub fn from_parts(tokens: Vec<String>, dim: usize, input: Vec<f64>, output: Vec<f64>) -> Result<EmbeddingTable> {
        let want = tokens.len() * dim;
        if dim == 0 || input.len() != want || output.len() != want {
            return Err(Error::Shape(format!(
                "{} tokens x {dim} needs {want} values, got {} and {}",
                tokens.len(),
                input.len(),
                output.len()
            )));
        }
        if !input.iter().chain(&output).all(|v| v.is_finite()) {
            return Err(Error::Domain("embedding table is not finite".into()));
        }
        Ok(EmbeddingTable {
            dim,
            tokens,
            input,
            output,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn input_vector(&self, i: u32) -> &[f64] {
        let s = i as usize * self.dim;
        &self.input[s..s + self.dim]
    }

    pub fn output_vector(&self, i: u32) -> &[f64] {
        let s = i as usize * self.dim;
        &self.output[s..s + self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.input.iter().chain(&self.output).all(|v| v.is_finite())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(MAGIC, VERSION);
        w.u64(self.dim as u64);
        w.strs(&self.tokens);
        w.f64s(&self.input);
        w.f64s(&self.output);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<EmbeddingTable> {
        let (mut r, version) = Reader::open(bytes, MAGIC, "embedding table")?;
        binio::expect_version(version, VERSION, "embedding table")?;
        let dim = r.usize()?;
        let tokens = r.strs()?;
        let input = r.f64s()?;
        let output = r.f64s()?;
        r.finish()?;
        EmbeddingTable::from_parts(tokens, dim, input, output).map_err(|e| Error::format("embedding table", e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<EmbeddingTable> {
        EmbeddingTable::from_bytes(&binio::read_file(path)?)
    }

    /// One `token v1 ... vd` line per token (input vectors).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.tokens.iter().enumerate() {
            out.push_str(t);
            for v in self.input_vector(i as u32) {
                out.push(' ');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Loss and gradients of one (center, context, negatives) triple.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    pub loss: f64,
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln σ(x)`, stable for large `|x|`.
fn neg_log_sigmoid(x: f64) -> f64 {
    (-x).max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `-ln σ(v·u_c) - Σ_k ln σ(-v·u_k)` and its gradients.
pub fn pair_loss_and_grad(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> PairGradient {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let s = dot(center, context);
    let mut loss = neg_log_sigmoid(s);
    let pos = sigmoid(s) - 1.0;
    let mut g_center: Vec<f64> = context.iter().map(|u| pos * u).collect();
    let g_context = center.iter().map(|v| pos * v).collect();
    let mut g_neg = Vec::with_capacity(negatives.len());
    for u in negatives {
        let s = dot(center, u);
        loss += neg_log_sigmoid(-s);
        let q = sigmoid(s);
        for (g, x) in g_center.iter_mut().zip(u.iter()) {
            *g += q * x;
        }
        g_neg.push(center.iter().map(|v| q * v).collect());
    }
    PairGradient {
        loss,
        center: g_center,
        context: g_context,
        negatives: g_neg,
    }
}

/// Vector storage the SGD step reads from and writes to.
trait Tables {
    fn read_input(&self, w: u32, out: &mut [f64]);
    fn read_output(&self, w: u32, out: &mut [f64]);
    fn add_input(&mut self, w: u32, delta: &[f64], scale: f64);
    fn add_output(&mut self, w: u32, delta: &[f64], scale: f64);
}

impl Tables for EmbeddingTable {
    fn read_input(&self, w: u32, out: &mut [f64]) {
        out.copy_from_slice(self.input_vector(w));
    }
    fn read_output(&self, w: u32, out: &mut [f64]) {
        out.copy_from_slice(self.output_vector(w));
    }
    fn add_input(&mut self, w: u32, delta: &[f64], scale: f64) {
        let s = w as usize * self.dim;
        for (a, d) in self.input[s..s + self.dim].iter_mut().zip(delta) {
            *a += scale * d;
        }
    }
    fn add_output(&mut self, w: u32, delta: &[f64], scale: f64) {
        let s = w as usize * self.dim;
        for (a, d) in self.output[s..s + self.dim].iter_mut().zip(delta) {
            *a += scale * d;
        }
    }
}

/// Tables shared between threads without locks; each `f64` lives in an
/// `AtomicU64` and concurrent updates may overwrite each other.
struct SharedTables {
    dim: usize,
    input: Vec<AtomicU64>,
    output: Vec<AtomicU64>,
}

#[derive(Clone, Copy)]
struct SharedHandle<'a>(&'a SharedTables);

impl SharedTables {
    fn from_table(t: &EmbeddingTable) -> Self {
        let conv = |v: &[f64]| v.iter().map(|x| AtomicU64::new(x.to_bits())).collect();
        SharedTables {
            dim: t.dim,
            input: conv(&t.input),
            output: conv(&t.output),
        }
    }

    fn into_vecs(self) -> (Vec<f64>, Vec<f64>) {
        let conv = |v: Vec<AtomicU64>| v.into_iter().map(|a| f64::from_bits(a.into_inner())).collect();
        (conv(self.input), conv(self.output))
    }
}

fn atomic_read(slot: &[AtomicU64], out: &mut [f64]) {
    for (o, a) in out.iter_mut().zip(slot) {
        *o = f64::from_bits(a.load(Ordering::Relaxed));
    }
}

fn atomic_add(slot: &[AtomicU64], delta: &[f64], scale: f64) {
    for (a, d) in slot.iter().zip(delta) {
        let v = f64::from_bits(a.load(Ordering::Relaxed)) + scale * d;
        a.store(v.to_bits(), Ordering::Relaxed);
    }
}

impl Tables for SharedHandle<'_> {
    fn read_input(&self, w: u32, out: &mut [f64]) {
        let s = w as usize * self.0.dim;
        atomic_read(&self.0.input[s..s + self.0.dim], out);
    }
    fn read_output(&self, w: u32, out: &mut [f64]) {
        let s = w as usize * self.0.dim;
        atomic_read(&self.0.output[s..s + self.0.dim], out);
    }
    fn add_input(&mut self, w: u32, delta: &[f64], scale: f64) {
        let s = w as usize * self.0.dim;
        atomic_add(&self.0.input[s..s + self.0.dim], delta, scale);
    }
    fn add_output(&mut self, w: u32, delta: &[f64], scale: f64) {
        let s = w as usize * self.0.dim;
        atomic_add(&self.0.output[s..s + self.0.dim], delta, scale);
    }
}

struct Scratch {
    center: Vec<f64>,
    context: Vec<f64>,
    negs: Vec<Vec<f64>>,
    neg_ids: Vec<u32>,
}

impl Scratch {
    fn new(dim: usize, negatives: usize) -> Self {
        Scratch {
            center: vec![0.0; dim],
            context: vec![0.0; dim],
            negs: vec![vec![0.0; dim]; negatives],
            neg_ids: vec![0; negatives],
        }
    }
}

/// One SGD step on a pair; returns the pair loss before the update.
fn sgd_pair<T: Tables>(
    t: &mut T,
    center: u32,
    context: u32,
    sampler: &WeightedIndex<f64>,
    rng: &mut ChaCha8Rng,
    lr: f64,
    s: &mut Scratch,
) -> f64 {
    for id in s.neg_ids.iter_mut() {
        *id = sampler.sample(rng) as u32;
    }
    t.read_input(center, &mut s.center);
    t.read_output(context, &mut s.context);
    for (buf, &id) in s.negs.iter_mut().zip(&s.neg_ids) {
        t.read_output(id, buf);
    }
    let negs: Vec<&[f64]> = s.negs.iter().map(Vec::as_slice).collect();
    let g = pair_loss_and_grad(&s.center, &s.context, &negs);
    t.add_input(center, &g.center, -lr);
    t.add_output(context, &g.context, -lr);
    for (gn, &id) in g.negatives.iter().zip(&s.neg_ids) {
        t.add_output(id, gn, -lr);
    }
    g.loss
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkipGramStats {
    pub pairs_per_epoch: usize,
    /// Mean pair loss of each epoch, measured before each update.
    pub epoch_loss: Vec<f64>,
}

/// Unigram counts raised to 3/4.
fn negative_sampler(c: &Corpus) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(c.vocabulary().counts().iter().map(|&n| (n as f64).powf(0.75)))
        .map_err(|e| Error::Validation(format!("negative-sampling distribution: {e}")))
}

fn decayed(cfg: &SkipGramConfig, done: usize, total: usize) -> f64 {
    let frac = 1.0 - done as f64 / total.max(1) as f64;
    cfg.lr * frac.max(cfg.min_lr_fraction)
}

pub fn train_skipgram(c: &Corpus, cfg: &SkipGramConfig) -> Result<(EmbeddingTable, SkipGramStats)> {
    cfg.validate()?;
    if c.vocabulary().is_empty() {
        return Err(Error::Validation("vocabulary is empty".into()));
    }
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = EmbeddingTable::initialize(c.vocabulary().tokens().to_vec(), cfg.dim, &mut init_rng);
    let sampler = negative_sampler(c)?;
    let docs: Vec<&Vec<Option<u32>>> = c.all_docs().collect();
    let pairs_per_epoch: usize = docs.iter().map(|d| doc_pairs(d, cfg.window).count()).sum();
    let total = pairs_per_epoch * cfg.epochs;
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);

    if cfg.workers == 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(1);
        let mut scratch = Scratch::new(cfg.dim, cfg.negatives);
        let mut done = 0;
        for _ in 0..cfg.epochs {
            let mut sum = 0.0;
            for d in &docs {
                for (w, ctx) in doc_pairs(d, cfg.window) {
                    let lr = decayed(cfg, done, total);
                    sum += sgd_pair(&mut table, w, ctx, &sampler, &mut rng, lr, &mut scratch);
                    done += 1;
                }
            }
            epoch_loss.push(sum / pairs_per_epoch.max(1) as f64);
        }
    } else {
        let shared = SharedTables::from_table(&table);
        let progress = AtomicUsize::new(0);
        let chunk = docs.len().div_ceil(cfg.workers).max(1);
        for epoch in 0..cfg.epochs {
            let sums: Vec<f64> = std::thread::scope(|scope| {
                let handles: Vec<_> = docs
                    .chunks(chunk)
                    .enumerate()
                    .map(|(k, part)| {
                        let (sampler, progress, shared) = (&sampler, &progress, &shared);
                        scope.spawn(move || {
                            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                            rng.set_stream(1 + (epoch * cfg.workers + k) as u64);
                            let mut handle = SharedHandle(shared);
                            let mut scratch = Scratch::new(cfg.dim, cfg.negatives);
                            let mut sum = 0.0;
                            for d in part {
                                for (w, ctx) in doc_pairs(d, cfg.window) {
                                    let done = progress.fetch_add(1, Ordering::Relaxed);
                                    let lr = decayed(cfg, done, total);
                                    sum += sgd_pair(&mut handle, w, ctx, sampler, &mut rng, lr, &mut scratch);
                                }
                            }
                            sum
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
            });
            epoch_loss.push(sums.iter().sum::<f64>() / pairs_per_epoch.max(1) as f64);
        }
        let (input, output) = shared.into_vecs();
        table.input = input;
        table.output = output;
    }
    if !table.is_finite() {
        return Err(Error::Numeric {
            epoch: cfg.epochs,
            msg: "embedding table diverged".into(),
        });
    }
    Ok((
        table,
        SkipGramStats {
            pairs_per_epoch,
            epoch_loss,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::CorpusOptions;

    fn toy() -> Corpus {
        let records = [
            ("a", "graph neural network learns node representation"),
            ("a", "graph network message passing node"),
            ("b", "word embedding skip gram negative sampling"),
            ("b", "skip gram word vector embedding"),
            ("c", "graph node degree core network"),
        ];
        Corpus::build(&records, &CorpusOptions::with_min_count(1))
    }

    #[test]
    fn config_errors() {
        let c = toy();
        for bad in [
            SkipGramConfig { dim: 0, ..Default::default() },
            SkipGramConfig { negatives: 0, ..Default::default() },
            SkipGramConfig { window: 0, ..Default::default() },
        ] {
            assert!(matches!(train_skipgram(&c, &bad), Err(Error::Config(_))));
        }
    }

    #[test]
    fn zero_epochs_returns_initial_tables() {
        let c = toy();
        let cfg = SkipGramConfig { epochs: 0, dim: 8, seed: 4, ..Default::default() };
        let (t, stats) = train_skipgram(&c, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(t, EmbeddingTable::initialize(c.vocabulary().tokens().to_vec(), 8, &mut rng));
        assert!(stats.epoch_loss.is_empty());
        assert!(t.output.iter().all(|&v| v == 0.0));
        assert!(t.input.iter().all(|&v| v.abs() <= 0.5 / 8.0));
    }

    #[test]
    fn single_worker_is_reproducible() {
        let c = toy();
        let cfg = SkipGramConfig { dim: 8, epochs: 3, ..Default::default() };
        assert_eq!(train_skipgram(&c, &cfg).unwrap(), train_skipgram(&c, &cfg).unwrap());
    }

    #[test]
    fn parallel_training_stays_finite() {
        let c = toy();
        let cfg = SkipGramConfig { dim: 8, epochs: 3, workers: 3, ..Default::default() };
        let (t, stats) = train_skipgram(&c, &cfg).unwrap();
        assert!(t.is_finite());
        assert_eq!(stats.epoch_loss.len(), 3);
    }

    #[test]
    fn table_round_trips() {
        let c = toy();
        let (t, _) = train_skipgram(&c, &SkipGramConfig { dim: 4, epochs: 1, ..Default::default() }).unwrap();
        assert_eq!(EmbeddingTable::from_bytes(&t.to_bytes()).unwrap(), t);
        let text = t.to_text();
        let first = text.lines().next().unwrap();
        assert_eq!(first.split(' ').count(), 5);
        assert!(first.starts_with("graph "));
        let mut bytes = t.to_bytes();
        bytes.truncate(bytes.len() - 1);
        assert!(EmbeddingTable::from_bytes(&bytes).is_err());
    }

    #[test]
    fn stable_log_sigmoid() {
        assert!((neg_log_sigmoid(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!(neg_log_sigmoid(800.0) < 1e-300);
        assert!((neg_log_sigmoid(-800.0) - 800.0).abs() < 1e-9);
        assert!((sigmoid(-800.0)).abs() < 1e-300);
    }
}
