//! Rating predictors: a biased matrix-factorisation model for the rating term
//! of the utility, and a bias-only baseline used as the primitive model.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::graph::{write_file, NodeId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatingScale {
    pub min: f64,
    pub max: f64,
}

impl RatingScale {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::InvalidParameter(format!("invalid rating scale [{min}, {max}]")));
        }
        Ok(Self { min, max })
    }

    pub fn clamp(&self, r: f64) -> f64 {
        r.clamp(self.min, self.max)
    }

    /// Maps a rating on the scale to `[0, 1]`.
    pub fn normalize(&self, r: f64) -> f64 {
        (self.clamp(r) - self.min) / (self.max - self.min)
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.min && r <= self.max
    }
}

impl Default for RatingScale {
    fn default() -> Self {
        Self { min: 1.0, max: 5.0 }
    }
}

/// One observed rating between graph nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub user: NodeId,
    pub item: NodeId,
    pub value: f64,
    pub timestamp: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    BiasedMf,
    BiasOnly,
}

impl ModelKind {
    fn as_str(self) -> &'static str {
        match self {
            ModelKind::BiasedMf => "biased-mf",
            ModelKind::BiasOnly => "bias-only",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatingModel {
    pub kind: ModelKind,
    pub scale: RatingScale,
    pub global_mean: f64,
    pub user_bias: HashMap<NodeId, f64>,
    pub item_bias: HashMap<NodeId, f64>,
    pub user_factors: HashMap<NodeId, Vec<f64>>,
    pub item_factors: HashMap<NodeId, Vec<f64>>,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfConfig {
    pub k: usize,
    pub epochs: usize,
    pub lr: f64,
    pub reg: f64,
    pub init_std: f64,
    pub seed: u64,
}

impl Default for MfConfig {
    fn default() -> Self {
        Self {
            k: 32,
            epochs: 50,
            lr: 0.005,
            reg: 0.02,
            init_std: 0.01,
            seed: 0,
        }
    }
}

impl RatingModel {
    /// Clamped estimate. Missing user or item terms are dropped, so a pair
    /// of unknown ids falls back to the global mean.
    pub fn predict(&self, user: NodeId, item: NodeId) -> f64 {
        let mut r = self.global_mean;
        r += self.user_bias.get(&user).copied().unwrap_or(0.0);
        r += self.item_bias.get(&item).copied().unwrap_or(0.0);
        if let (Some(p), Some(q)) = (self.user_factors.get(&user), self.item_factors.get(&item)) {
            r += p.iter().zip(q).map(|(a, b)| a * b).sum::<f64>();
        }
        self.scale.clamp(r)
    }

    /// Magnitude of the factor term for a pair (zero for bias-only models).
    pub fn factor_term(&self, user: NodeId, item: NodeId) -> f64 {
        match (self.user_factors.get(&user), self.item_factors.get(&item)) {
            (Some(p), Some(q)) => p.iter().zip(q).map(|(a, b)| a * b).sum(),
            _ => 0.0,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "model {} k {} mean {:?} min {:?} max {:?}",
            self.kind.as_str(),
            self.k,
            self.global_mean,
            self.scale.min,
            self.scale.max
        );
        let block = |s: &mut String, tag: &str, bias: &HashMap<NodeId, f64>, factors: &HashMap<NodeId, Vec<f64>>| {
            let ids: BTreeSet<NodeId> = bias.keys().chain(factors.keys()).copied().collect();
            for id in ids {
                let _ = write!(s, "{tag} {id} {:?}", bias.get(&id).copied().unwrap_or(0.0));
                if let Some(f) = factors.get(&id) {
                    for x in f {
                        let _ = write!(s, " {x:?}");
                    }
                }
                s.push('\n');
            }
        };
        block(&mut s, "user", &self.user_bias, &self.user_factors);
        block(&mut s, "item", &self.item_bias, &self.item_factors);
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_text())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "missing header"))?
            .split_whitespace()
            .collect();
        let bad_header = || Error::parse(path, 1, "malformed model header");
        let ["model", kind, "k", k, "mean", mean, "min", min, "max", max] = header[..] else {
            return Err(bad_header());
        };
        let kind = match kind {
            "biased-mf" => ModelKind::BiasedMf,
            "bias-only" => ModelKind::BiasOnly,
            _ => return Err(bad_header()),
        };
        let num = |t: &str| t.parse::<f64>().map_err(|_| bad_header());
        let k: usize = k.parse().map_err(|_| bad_header())?;
        let mut model = RatingModel {
            kind,
            scale: RatingScale::new(num(min)?, num(max)?).map_err(|_| bad_header())?,
            global_mean: num(mean)?,
            user_bias: HashMap::new(),
            item_bias: HashMap::new(),
            user_factors: HashMap::new(),
            item_factors: HashMap::new(),
            k,
        };
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let mut cols = line.split_whitespace();
            let tag = cols.next();
            let id = cols.next().and_then(|t| t.parse::<u32>().ok()).map(NodeId);
            let values: std::result::Result<Vec<f64>, _> = cols.map(str::parse::<f64>).collect();
            let (Some(tag), Some(id), Ok(values)) = (tag, id, values) else {
                return Err(Error::parse(path, lineno, "malformed parameter line"));
            };
            let expected = if kind == ModelKind::BiasedMf { k + 1 } else { 1 };
            if values.len() != expected {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("expected {expected} values, found {}", values.len()),
                ));
            }
            let (bias, factors) = match tag {
                "user" => (&mut model.user_bias, &mut model.user_factors),
                "item" => (&mut model.item_bias, &mut model.item_factors),
                _ => return Err(Error::parse(path, lineno, format!("unknown block {tag:?}"))),
            };
            bias.insert(id, values[0]);
            if kind == ModelKind::BiasedMf {
                factors.insert(id, values[1..].to_vec());
            }
        }
        Ok(model)
    }
}

fn global_mean(train: &[Rating]) -> Result<f64> {
    if train.is_empty() {
        return Err(Error::EmptyTrain);
    }
    Ok(train.iter().map(|r| r.value).sum::<f64>() / train.len() as f64)
}

/// Closed-form baseline: global mean plus damped user and item residual
/// means (user terms first, item terms on the user-corrected residuals).
pub fn fit_bias_only(train: &[Rating], scale: RatingScale, damping: f64) -> Result<RatingModel> {
    let mu = global_mean(train)?;
    let mut user_acc: BTreeMap<NodeId, (f64, f64)> = BTreeMap::new();
    for r in train {
        let e = user_acc.entry(r.user).or_default();
        e.0 += r.value - mu;
        e.1 += 1.0;
    }
    let user_bias: HashMap<NodeId, f64> =
        user_acc.into_iter().map(|(u, (s, n))| (u, s / (n + damping))).collect();
    let mut item_acc: BTreeMap<NodeId, (f64, f64)> = BTreeMap::new();
    for r in train {
        let e = item_acc.entry(r.item).or_default();
        e.0 += r.value - mu - user_bias[&r.user];
        e.1 += 1.0;
    }
    let item_bias = item_acc.into_iter().map(|(i, (s, n))| (i, s / (n + damping))).collect();
    Ok(RatingModel {
        kind: ModelKind::BiasOnly,
        scale,
        global_mean: mu,
        user_bias,
        item_bias,
        user_factors: HashMap::new(),
        item_factors: HashMap::new(),
        k: 0,
    })
}

pub fn fit_biased_mf(train: &[Rating], scale: RatingScale, cfg: &MfConfig) -> Result<RatingModel> {
    fit_biased_mf_with_history(train, scale, cfg).map(|(m, _)| m)
}

/// SGD on squared error of `μ + b_u + b_i + p_u·q_i` with L2 penalty.
/// Also returns the training RMSE before the first epoch and after each one.
pub fn fit_biased_mf_with_history(
    train: &[Rating],
    scale: RatingScale,
    cfg: &MfConfig,
) -> Result<(RatingModel, Vec<f64>)> {
    let mu = global_mean(train)?;
    if cfg.k < 1 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, cfg.init_std).map_err(|e| Error::InvalidParameter(e.to_string()))?;

    let users: BTreeSet<NodeId> = train.iter().map(|r| r.user).collect();
    let items: BTreeSet<NodeId> = train.iter().map(|r| r.item).collect();
    let uidx: HashMap<NodeId, usize> = users.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let iidx: HashMap<NodeId, usize> = items.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let k = cfg.k;
    let mut bu = vec![0.0; users.len()];
    let mut bi = vec![0.0; items.len()];
    let mut p: Vec<f64> = (0..users.len() * k).map(|_| normal.sample(&mut rng)).collect();
    let mut q: Vec<f64> = (0..items.len() * k).map(|_| normal.sample(&mut rng)).collect();
    let data: Vec<(usize, usize, f64)> = train.iter().map(|r| (uidx[&r.user], iidx[&r.item], r.value)).collect();
    let mut order: Vec<usize> = (0..data.len()).collect();

    let rmse = |bu: &[f64], bi: &[f64], p: &[f64], q: &[f64]| {
        let se: f64 = data
            .iter()
            .map(|&(u, i, r)| {
                let pred = mu + bu[u] + bi[i] + dot_k(&p[u * k..(u + 1) * k], &q[i * k..(i + 1) * k]);
                (scale.clamp(pred) - r).powi(2)
            })
            .sum();
        (se / data.len() as f64).sqrt()
    };
    let mut history = vec![rmse(&bu, &bi, &p, &q)];
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &idx in &order {
            let (u, i, r) = data[idx];
            let (pu, qi) = (u * k, i * k);
            let pred = mu + bu[u] + bi[i] + dot_k(&p[pu..pu + k], &q[qi..qi + k]);
            let err = r - pred;
            bu[u] += cfg.lr * (err - cfg.reg * bu[u]);
            bi[i] += cfg.lr * (err - cfg.reg * bi[i]);
            for f in 0..k {
                let (puf, qif) = (p[pu + f], q[qi + f]);
                p[pu + f] += cfg.lr * (err * qif - cfg.reg * puf);
                q[qi + f] += cfg.lr * (err * puf - cfg.reg * qif);
            }
        }
        let h = rmse(&bu, &bi, &p, &q);
        if !h.is_finite() {
            return Err(Error::Numeric("matrix factorisation diverged".into()));
        }
        history.push(h);
    }

    let model = RatingModel {
        kind: ModelKind::BiasedMf,
        scale,
        global_mean: mu,
        user_bias: users.iter().map(|u| (*u, bu[uidx[u]])).collect(),
        item_bias: items.iter().map(|i| (*i, bi[iidx[i]])).collect(),
        user_factors: users
            .iter()
            .map(|u| (*u, p[uidx[u] * k..(uidx[u] + 1) * k].to_vec()))
            .collect(),
        item_factors: items
            .iter()
            .map(|i| (*i, q[iidx[i] * k..(iidx[i] + 1) * k].to_vec()))
            .collect(),
        k,
    };
    Ok((model, history))
}

#[inline]
fn dot_k(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One cross-validation fold.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTestSplit {
    pub train: Vec<Rating>,
    pub test: Vec<Rating>,
    pub fold_id: usize,
}

/// Assigns every record to one of `k` folds.
///
/// Each user's records are shuffled and dealt round-robin from a random
/// starting fold. Items whose records all landed in one fold are then dealt
/// round-robin on their own. Records that would still leave their user or
/// item absent from a fold's training side (a user or item with a single
/// record) are pinned to training in every fold; the returned count says how
/// many.
pub fn assign_folds(records: &[Rating], k: usize, seed: u64) -> Result<(Vec<Option<usize>>, usize)> {
    if k < 2 {
        return Err(Error::InvalidParameter("need at least 2 folds".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_user: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    let mut by_item: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    for (idx, r) in records.iter().enumerate() {
        by_user.entry(r.user).or_default().push(idx);
        by_item.entry(r.item).or_default().push(idx);
    }
    let mut fold = vec![0usize; records.len()];
    for idxs in by_user.values_mut() {
        idxs.shuffle(&mut rng);
        let offset = rand::Rng::random_range(&mut rng, 0..k);
        for (j, &idx) in idxs.iter().enumerate() {
            fold[idx] = (offset + j) % k;
        }
    }
    for idxs in by_item.values_mut() {
        if idxs.len() >= 2 && idxs.iter().all(|&i| fold[i] == fold[idxs[0]]) {
            idxs.shuffle(&mut rng);
            let offset = rand::Rng::random_range(&mut rng, 0..k);
            for (j, &idx) in idxs.iter().enumerate() {
                fold[idx] = (offset + j) % k;
            }
        }
    }
    let concentrated = |groups: &BTreeMap<NodeId, Vec<usize>>, fold: &[usize]| -> BTreeSet<usize> {
        groups
            .values()
            .filter(|idxs| idxs.iter().all(|&i| fold[i] == fold[idxs[0]]))
            .flatten()
            .copied()
            .collect()
    };
    let mut pinned = concentrated(&by_user, &fold);
    pinned.extend(concentrated(&by_item, &fold));
    let assignment = (0..records.len())
        .map(|i| if pinned.contains(&i) { None } else { Some(fold[i]) })
        .collect();
    Ok((assignment, pinned.len()))
}

/// Materialises fold `fold_id` of a `k`-fold split.
pub fn k_fold_split(records: &[Rating], k: usize, fold_id: usize, seed: u64) -> Result<TrainTestSplit> {
    if fold_id >= k {
        return Err(Error::InvalidParameter(format!("fold {fold_id} out of range for {k} folds")));
    }
    let (assignment, _) = assign_folds(records, k, seed)?;
    let mut split = TrainTestSplit { train: Vec::new(), test: Vec::new(), fold_id };
    for (r, f) in records.iter().zip(assignment) {
        if f == Some(fold_id) {
            split.test.push(*r);
        } else {
            split.train.push(*r);
        }
    }
    Ok(split)
}
