//! Skip-gram with negative sampling over walk corpora.
//!
//! Each center node `v` has an input vector (the published embedding) and an
//! output vector used when the node appears as context. For a positive pair
//! `(v, c)` with negatives `n_1..n_k` the loss is
//!
//! ```text
//! L = -ln σ(u_c · v) - Σ_j ln σ(-u_{n_j} · v)
//! ```
//!
//! and one step of plain SGD is applied to `v`, `u_c` and every `u_{n_j}`,
//! all gradients taken at the pre-update parameters.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{write_file, NodeId};
use crate::walk::WalkCorpus;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub min_count: u64,
    pub epochs: usize,
    pub negatives: usize,
    pub learning_rate: f64,
    pub min_learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 128,
            window: 2,
            min_count: 1,
            epochs: 100,
            negatives: 5,
            learning_rate: 0.025,
            min_learning_rate: 1e-4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_owned()));
        if self.dim < 1 {
            return bad("dim must be >= 1");
        }
        if self.window < 1 {
            return bad("window must be >= 1");
        }
        if self.min_count < 1 {
            return bad("min_count must be >= 1");
        }
        if self.epochs < 1 {
            return bad("epochs must be >= 1");
        }
        if self.negatives < 1 {
            return bad("negatives must be >= 1");
        }
        if !(self.learning_rate > 0.0) || !(self.min_learning_rate >= 0.0) {
            return bad("learning rates must be positive");
        }
        Ok(())
    }
}

/// Nodes kept for training with their corpus frequencies, ascending by id.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    ids: Vec<NodeId>,
    counts: Vec<u64>,
    index: HashMap<NodeId, usize>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn count(&self, id: NodeId) -> Option<u64> {
        self.index.get(&id).map(|&i| self.counts[i])
    }

    pub fn position(&self, id: NodeId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// Negative-sampling probabilities ∝ count^0.75, aligned with `ids()`.
    pub fn negative_distribution(&self) -> Vec<f64> {
        let w: Vec<f64> = self.counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    }
}

pub fn build_vocabulary(corpus: &WalkCorpus, min_count: u64) -> Result<Vocabulary> {
    if corpus.token_count() == 0 {
        return Err(Error::EmptyCorpus);
    }
    let mut freq: BTreeMap<NodeId, u64> = BTreeMap::new();
    for v in corpus.walks.iter().flatten() {
        *freq.entry(*v).or_default() += 1;
    }
    let (ids, counts): (Vec<_>, Vec<_>) = freq.into_iter().filter(|&(_, c)| c >= min_count).unzip();
    if ids.is_empty() {
        return Err(Error::EmptyVocabulary(min_count));
    }
    let index = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    Ok(Vocabulary { ids, counts, index })
}

/// Node embeddings. Rows are stored contiguously in ascending id order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    ids: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    dim: usize,
    input: Vec<f64>,
    output: Vec<f64>,
}

impl EmbeddingTable {
    /// Input vectors uniform in `[-0.5/d, 0.5/d]`, output vectors zero.
    pub fn initialize<R: Rng + ?Sized>(vocab: &Vocabulary, dim: usize, rng: &mut R) -> Self {
        let half = 0.5 / dim as f64;
        let n = vocab.len();
        let input = (0..n * dim).map(|_| rng.random_range(-half..half)).collect();
        Self {
            ids: vocab.ids.clone(),
            index: vocab.index.clone(),
            dim,
            input,
            output: vec![0.0; n * dim],
        }
    }

    /// Builds a table from explicit input vectors; output vectors are zero.
    pub fn from_vectors(rows: Vec<(NodeId, Vec<f64>)>) -> Result<Self> {
        let mut rows = rows;
        rows.sort_by_key(|(id, _)| *id);
        let dim = rows.first().map_or(0, |(_, v)| v.len());
        let mut ids = Vec::with_capacity(rows.len());
        let mut input = Vec::with_capacity(rows.len() * dim);
        for (id, v) in rows {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
            }
            if ids.last() == Some(&id) {
                return Err(Error::InvalidParameter(format!("duplicate embedding row for node {id}")));
            }
            ids.push(id);
            input.extend(v);
        }
        let index = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let output = vec![0.0; input.len()];
        Ok(Self { ids, index, dim, input, output })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn vector(&self, id: NodeId) -> Option<&[f64]> {
        self.index.get(&id).map(|&i| self.row(&self.input, i))
    }

    pub fn output_vector(&self, id: NodeId) -> Option<&[f64]> {
        self.index.get(&id).map(|&i| self.row(&self.output, i))
    }

    pub fn vector_mut(&mut self, id: NodeId) -> Option<&mut [f64]> {
        let d = self.dim;
        self.index.get(&id).map(|&i| &mut self.input[i * d..(i + 1) * d])
    }

    pub fn output_vector_mut(&mut self, id: NodeId) -> Option<&mut [f64]> {
        let d = self.dim;
        self.index.get(&id).map(|&i| &mut self.output[i * d..(i + 1) * d])
    }

    pub fn cosine(&self, a: NodeId, b: NodeId) -> Option<f64> {
        let (x, y) = (self.vector(a)?, self.vector(b)?);
        let (nx, ny) = (dot(x, x).sqrt(), dot(y, y).sqrt());
        if nx == 0.0 || ny == 0.0 {
            return Some(0.0);
        }
        Some(dot(x, y) / (nx * ny))
    }

    pub fn all_finite(&self) -> bool {
        self.input.iter().chain(&self.output).all(|x| x.is_finite())
    }

    pub fn max_norm(&self) -> f64 {
        self.input
            .chunks(self.dim.max(1))
            .chain(self.output.chunks(self.dim.max(1)))
            .map(|r| dot(r, r).sqrt())
            .fold(0.0, f64::max)
    }

    #[inline]
    fn row<'a>(&self, table: &'a [f64], i: usize) -> &'a [f64] {
        &table[i * self.dim..(i + 1) * self.dim]
    }

    /// One SGNS update for a (center, context) pair; returns the loss before
    /// the update.
    pub fn sgns_pair_step(
        &mut self,
        center: NodeId,
        context: NodeId,
        negatives: &[NodeId],
        lr: f64,
    ) -> Result<f64> {
        let pos = |id: NodeId| self.index.get(&id).copied().ok_or(Error::OutOfVocabulary(id));
        let c = pos(center)?;
        let ctx = pos(context)?;
        let negs = negatives.iter().map(|&n| pos(n)).collect::<Result<Vec<_>>>()?;
        let mut grad_v = vec![0.0; self.dim];
        Ok(self.step_indices(c, ctx, &negs, lr, &mut grad_v))
    }

    fn step_indices(&mut self, c: usize, ctx: usize, negs: &[usize], lr: f64, grad_v: &mut [f64]) -> f64 {
        let d = self.dim;
        grad_v.iter_mut().for_each(|g| *g = 0.0);
        let v = &self.input[c * d..(c + 1) * d];

        let mut loss = 0.0;
        // Coefficients g such that dL/du = g·v and dL/dv accumulates g·u,
        // computed before any row is modified.
        let mut coeffs = Vec::with_capacity(negs.len() + 1);
        let s = dot(&self.output[ctx * d..(ctx + 1) * d], v);
        loss -= log_sigmoid(s);
        coeffs.push((ctx, sigmoid(s) - 1.0));
        for &n in negs {
            let s = dot(&self.output[n * d..(n + 1) * d], v);
            loss -= log_sigmoid(-s);
            coeffs.push((n, sigmoid(s)));
        }
        for &(row, g) in &coeffs {
            let u = &self.output[row * d..(row + 1) * d];
            for k in 0..d {
                grad_v[k] += g * u[k];
            }
        }
        for &(row, g) in &coeffs {
            let (input, output) = (&self.input, &mut self.output);
            let v = &input[c * d..(c + 1) * d];
            let u = &mut output[row * d..(row + 1) * d];
            for k in 0..d {
                u[k] -= lr * g * v[k];
            }
        }
        let v = &mut self.input[c * d..(c + 1) * d];
        for k in 0..d {
            v[k] -= lr * grad_v[k];
        }
        loss
    }

    /// `<node_count> <dim>` header, then `<NodeId> <f1> … <fd>` per row.
    /// Floats use the shortest representation that parses back exactly.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.len(), self.dim);
        for (i, id) in self.ids.iter().enumerate() {
            s.push_str(&id.to_string());
            for x in self.row(&self.input, i) {
                s.push(' ');
                s.push_str(&format!("{x:?}"));
            }
            s.push('\n');
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_text())
    }

    /// Loads input vectors; output vectors are not persisted and come back as
    /// zeros.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse(path, 1, "missing header"))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::parse(path, 1, "malformed header")))
            .collect::<Result<_>>()?;
        let [count, dim] = dims[..] else {
            return Err(Error::parse(path, 1, "header must be `<node_count> <dim>`"));
        };
        let mut rows = Vec::with_capacity(count);
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let mut cols = line.split_whitespace();
            let id = cols
                .next()
                .and_then(|t| t.parse::<u32>().ok())
                .ok_or_else(|| Error::parse(path, lineno, "bad node id"))?;
            let v: Vec<f64> = cols
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(path, lineno, "bad float"))?;
            if v.len() != dim {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("expected {} columns, found {}", dim + 1, v.len() + 1),
                ));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::parse(path, lineno, "non-finite value"));
            }
            rows.push((NodeId(id), v));
        }
        if rows.len() != count {
            return Err(Error::parse(
                path,
                rows.len() + 1,
                format!("header announces {count} rows, found {}", rows.len()),
            ));
        }
        let mut table = Self::from_vectors(rows).map_err(|e| Error::parse(path, 1, e.to_string()))?;
        if table.is_empty() {
            table.dim = dim;
        }
        Ok(table)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln σ(x), stable for large |x|.
#[inline]
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Loss of one positive pair plus negatives, as a pure function of the
/// vectors involved.
pub fn sgns_loss(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    -log_sigmoid(dot(context, center)) - negatives.iter().map(|u| log_sigmoid(-dot(u, center))).sum::<f64>()
}

/// Analytic gradients of [`sgns_loss`] with respect to the center, the
/// context and each negative vector.
pub fn sgns_gradients(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let gc = sigmoid(dot(context, center)) - 1.0;
    let mut grad_v: Vec<f64> = context.iter().map(|u| gc * u).collect();
    let grad_ctx = center.iter().map(|v| gc * v).collect();
    let mut grad_negs = Vec::with_capacity(negatives.len());
    for u in negatives {
        let g = sigmoid(dot(u, center));
        for (gv, x) in grad_v.iter_mut().zip(u.iter()) {
            *gv += g * x;
        }
        grad_negs.push(center.iter().map(|v| g * v).collect());
    }
    (grad_v, grad_ctx, grad_negs)
}

/// Per-epoch mean pair loss recorded during training.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
    pub pairs_per_epoch: usize,
}

pub fn train(corpus: &WalkCorpus, cfg: &TrainConfig) -> Result<EmbeddingTable> {
    train_with_report(corpus, cfg).map(|(t, _)| t)
}

/// Single-threaded SGNS training; identical inputs give identical tables.
pub fn train_with_report(corpus: &WalkCorpus, cfg: &TrainConfig) -> Result<(EmbeddingTable, TrainReport)> {
    cfg.validate()?;
    let vocab = build_vocabulary(corpus, cfg.min_count)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = EmbeddingTable::initialize(&vocab, cfg.dim, &mut rng);
    let sampler = WeightedIndex::new(vocab.negative_distribution())
        .map_err(|e| Error::Numeric(format!("negative sampler: {e}")))?;

    // Corpus re-encoded as vocabulary positions; out-of-vocabulary tokens are
    // dropped before windows are formed.
    let walks: Vec<Vec<usize>> = corpus
        .walks
        .iter()
        .map(|w| w.iter().filter_map(|id| vocab.position(*id)).collect())
        .collect();
    let tokens: usize = walks.iter().map(Vec::len).sum();
    let total = (tokens * cfg.epochs).max(1) as f64;
    let mut processed = 0usize;
    let mut report = TrainReport::default();
    let mut negs = Vec::with_capacity(cfg.negatives);
    let mut grad_v = vec![0.0; cfg.dim];

    for _ in 0..cfg.epochs {
        let mut loss_sum = 0.0;
        let mut pairs = 0usize;
        for walk in &walks {
            for (i, &center) in walk.iter().enumerate() {
                let progress = processed as f64 / total;
                let lr = (cfg.learning_rate * (1.0 - progress)).max(cfg.min_learning_rate);
                processed += 1;
                let lo = i.saturating_sub(cfg.window);
                let hi = (i + cfg.window).min(walk.len() - 1);
                for j in lo..=hi {
                    if j == i {
                        continue;
                    }
                    let ctx = walk[j];
                    negs.clear();
                    while negs.len() < cfg.negatives {
                        let mut n = sampler.sample(&mut rng);
                        let mut tries = 0;
                        while n == ctx && tries < 16 && vocab.len() > 1 {
                            n = sampler.sample(&mut rng);
                            tries += 1;
                        }
                        if n == ctx {
                            break;
                        }
                        negs.push(n);
                    }
                    loss_sum += table.step_indices(center, ctx, &negs, lr, &mut grad_v);
                    pairs += 1;
                }
            }
        }
        if !loss_sum.is_finite() {
            return Err(Error::Numeric("skip-gram loss diverged".into()));
        }
        report.pairs_per_epoch = pairs;
        report.epoch_losses.push(if pairs > 0 { loss_sum / pairs as f64 } else { 0.0 });
    }
    Ok((table, report))
}

/// Context positions paired with position `i` under a symmetric window.
pub fn context_positions(len: usize, i: usize, window: usize) -> impl Iterator<Item = usize> {
    let lo = i.saturating_sub(window);
    let hi = (i + window).min(len.saturating_sub(1));
    (lo..=hi).filter(move |&j| j != i)
}
