//! Accuracy and beyond-accuracy metrics, and the iterative maximum-hull
//! coverage experiment.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::graph::{HinGraph, NodeId};
use crate::hull::{contains, HullVertices};
use crate::rating::{Rating, RatingModel};
use crate::recommend::{score_batch, RecommendationList, Recommender};

/// Per-user item sets, keyed by user.
pub type ItemSets = BTreeMap<NodeId, Vec<NodeId>>;

pub fn rmse_mae(pairs: &[(f64, f64)]) -> Result<(f64, f64)> {
    if pairs.is_empty() {
        return Err(Error::EmptyTest);
    }
    let n = pairs.len() as f64;
    let se: f64 = pairs.iter().map(|(p, t)| (p - t) * (p - t)).sum();
    let ae: f64 = pairs.iter().map(|(p, t)| (p - t).abs()).sum();
    Ok(((se / n).sqrt(), ae / n))
}

/// Relevant test items per user (true rating at or above `threshold`).
pub fn relevant_items(test: &[Rating], threshold: f64) -> ItemSets {
    let mut out: ItemSets = BTreeMap::new();
    for r in test {
        let e = out.entry(r.user).or_default();
        if r.value >= threshold && !e.contains(&r.item) {
            e.push(r.item);
        }
    }
    out
}

/// Macro-averaged Precision@N and Recall@N over users that have test data.
/// Precision skips users with an empty list; recall skips users with no
/// relevant test item.
pub fn precision_recall_at_n(rs: &ItemSets, test: &[Rating], n: usize, relevance_threshold: f64) -> (f64, f64) {
    let relevant = relevant_items(test, relevance_threshold);
    let (mut p_sum, mut p_cnt, mut r_sum, mut r_cnt) = (0.0, 0usize, 0.0, 0usize);
    for (user, rel) in &relevant {
        let list: &[NodeId] = rs.get(user).map(|l| &l[..l.len().min(n)]).unwrap_or(&[]);
        let hits = list.iter().filter(|i| rel.contains(i)).count() as f64;
        if !list.is_empty() {
            p_sum += hits / list.len() as f64;
            p_cnt += 1;
        }
        if !rel.is_empty() {
            r_sum += hits / rel.len() as f64;
            r_cnt += 1;
        }
    }
    let mean = |s: f64, c: usize| if c == 0 { 0.0 } else { s / c as f64 };
    (mean(p_sum, p_cnt), mean(r_sum, r_cnt))
}

/// Denominator of the serendipity and diversity ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SerendipityDenominator {
    /// `|RS_u|`, keeping both metrics in [0, 1].
    #[default]
    Recommended,
    /// `|PM_u|`, the literal reading.
    Primitive,
}

/// Per-user serendipity `|RS \ PM| / |RS|` and diversity
/// `|(RS \ PM) ∩ USEFUL| / |RS|`.
pub fn serendipity_diversity_per_user(
    rs: &ItemSets,
    pm: &ItemSets,
    useful: &ItemSets,
    denominator: SerendipityDenominator,
) -> BTreeMap<NodeId, (f64, f64)> {
    let empty = Vec::new();
    let mut out = BTreeMap::new();
    for (user, rec) in rs {
        let prim = pm.get(user).unwrap_or(&empty);
        let good = useful.get(user).unwrap_or(&empty);
        let denom = match denominator {
            SerendipityDenominator::Recommended => rec.len(),
            SerendipityDenominator::Primitive => prim.len(),
        };
        if rec.is_empty() || denom == 0 {
            continue;
        }
        let novel: BTreeSet<NodeId> = rec.iter().copied().filter(|i| !prim.contains(i)).collect();
        let useful_novel = novel.iter().filter(|i| good.contains(i)).count();
        out.insert(*user, (novel.len() as f64 / denom as f64, useful_novel as f64 / denom as f64));
    }
    out
}

pub fn serendipity_diversity(
    rs: &ItemSets,
    pm: &ItemSets,
    useful: &ItemSets,
    denominator: SerendipityDenominator,
) -> (f64, f64) {
    let per_user = serendipity_diversity_per_user(rs, pm, useful, denominator);
    if per_user.is_empty() {
        return (0.0, 0.0);
    }
    let n = per_user.len() as f64;
    let s = per_user.values().map(|v| v.0).sum::<f64>() / n;
    let d = per_user.values().map(|v| v.1).sum::<f64>() / n;
    (s, d)
}

/// Distinct recommended items over the catalog size.
pub fn catalog_coverage(rs: &ItemSets, catalog_size: usize) -> f64 {
    if catalog_size == 0 {
        return 0.0;
    }
    let distinct: BTreeSet<NodeId> = rs.values().flatten().copied().collect();
    distinct.len() as f64 / catalog_size as f64
}

/// Recommended items the user would find useful: true test rating at or
/// above `threshold` where one exists, else the model's prediction.
pub fn useful_items(rs: &ItemSets, test: &[Rating], model: &RatingModel, threshold: f64) -> ItemSets {
    let truth: HashMap<(NodeId, NodeId), f64> = test.iter().map(|r| ((r.user, r.item), r.value)).collect();
    rs.iter()
        .map(|(u, items)| {
            let keep = items
                .iter()
                .copied()
                .filter(|i| truth.get(&(*u, *i)).copied().unwrap_or_else(|| model.predict(*u, *i)) >= threshold)
                .collect();
            (*u, keep)
        })
        .collect()
}

/// Top-N of a (primitive) model's predictions over the catalog, skipping
/// `exclude`; descending prediction, then ascending id.
pub fn model_top_n(model: &RatingModel, user: NodeId, catalog: &[NodeId], exclude: &[NodeId], n: usize) -> Vec<NodeId> {
    let mut scored: Vec<(f64, NodeId)> = catalog
        .iter()
        .copied()
        .filter(|i| !exclude.contains(i))
        .map(|i| (model.predict(user, i), i))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(n).map(|(_, i)| i).collect()
}

pub fn lists_to_sets(lists: &[RecommendationList]) -> ItemSets {
    lists.iter().map(|l| (l.user, l.item_ids())).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub rmse: f64,
    pub mae: f64,
    pub precision_at_n: f64,
    pub recall_at_n: f64,
    pub unexpectedness: f64,
    pub serendipity: f64,
    pub diversity: f64,
    pub coverage: f64,
    pub n: usize,
}

impl MetricsReport {
    fn fields(&self) -> [(&'static str, f64); 8] {
        [
            ("rmse", self.rmse),
            ("mae", self.mae),
            ("precision_at_n", self.precision_at_n),
            ("recall_at_n", self.recall_at_n),
            ("unexpectedness", self.unexpectedness),
            ("serendipity", self.serendipity),
            ("diversity", self.diversity),
            ("coverage", self.coverage),
        ]
    }

    pub fn to_kv_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields() {
            writeln!(out, "{k} = {v:?}").expect("write to String");
        }
        writeln!(out, "n = {}", self.n).expect("write to String");
        out
    }

    pub fn csv_header() -> &'static str {
        "algorithm,fold,rmse,mae,precision_at_n,recall_at_n,unexpectedness,serendipity,diversity,coverage,n"
    }

    pub fn to_csv_row(&self, algorithm: &str, fold: usize) -> String {
        let vals: Vec<String> = self.fields().iter().map(|(_, v)| format!("{v:?}")).collect();
        format!("{algorithm},{fold},{},{}", vals.join(","), self.n)
    }

    /// Aligned two-column table for terminals.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields() {
            writeln!(out, "{k:<16}{v:>12.6}").expect("write to String");
        }
        writeln!(out, "{:<16}{:>12}", "n", self.n).expect("write to String");
        out
    }
}

/// Everything `evaluate` needs besides the recommendations themselves.
pub struct EvalInputs<'a> {
    pub test: &'a [Rating],
    pub model: &'a RatingModel,
    pub primitive: &'a RatingModel,
    pub train_items: &'a ItemSets,
    pub catalog: &'a [NodeId],
    pub n: usize,
    pub relevance_threshold: f64,
    pub useful_threshold: f64,
    pub denominator: SerendipityDenominator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserMetrics {
    pub user: NodeId,
    pub precision: f64,
    pub recall: f64,
    pub serendipity: f64,
    pub diversity: f64,
    pub unexpectedness: f64,
}

pub fn evaluate(lists: &[RecommendationList], inputs: &EvalInputs) -> Result<(MetricsReport, Vec<UserMetrics>)> {
    let pairs: Vec<(f64, f64)> = inputs.test.iter().map(|r| (inputs.model.predict(r.user, r.item), r.value)).collect();
    let (rmse, mae) = rmse_mae(&pairs)?;
    let rs = lists_to_sets(lists);
    let (precision_at_n, recall_at_n) = precision_recall_at_n(&rs, inputs.test, inputs.n, inputs.relevance_threshold);
    let empty = Vec::new();
    let pm: ItemSets = rs
        .keys()
        .map(|u| {
            let seen = inputs.train_items.get(u).unwrap_or(&empty);
            (*u, model_top_n(inputs.primitive, *u, inputs.catalog, seen, inputs.n))
        })
        .collect();
    let useful = useful_items(&rs, inputs.test, inputs.model, inputs.useful_threshold);
    let (serendipity, diversity) = serendipity_diversity(&rs, &pm, &useful, inputs.denominator);
    let coverage = catalog_coverage(&rs, inputs.catalog.len());

    let sd = serendipity_diversity_per_user(&rs, &pm, &useful, inputs.denominator);
    let mut per_user = Vec::new();
    let mut unexp_sum = 0.0;
    let mut unexp_users = 0usize;
    for list in lists {
        let single: ItemSets = BTreeMap::from([(list.user, list.item_ids())]);
        let user_test: Vec<Rating> = inputs.test.iter().filter(|r| r.user == list.user).copied().collect();
        let (precision, recall) = precision_recall_at_n(&single, &user_test, inputs.n, inputs.relevance_threshold);
        let unexpectedness = if list.items.is_empty() {
            0.0
        } else {
            list.items.iter().map(|s| s.unexpectedness_raw).sum::<f64>() / list.items.len() as f64
        };
        if !list.items.is_empty() {
            unexp_sum += unexpectedness;
            unexp_users += 1;
        }
        let (serendipity, diversity) = sd.get(&list.user).copied().unwrap_or((0.0, 0.0));
        per_user.push(UserMetrics { user: list.user, precision, recall, serendipity, diversity, unexpectedness });
    }
    let unexpectedness = if unexp_users == 0 { 0.0 } else { unexp_sum / unexp_users as f64 };
    let report = MetricsReport {
        rmse,
        mae,
        precision_at_n,
        recall_at_n,
        unexpectedness,
        serendipity,
        diversity,
        coverage,
        n: inputs.n,
    };
    Ok((report, per_user))
}

pub fn per_user_csv(graph: &HinGraph, rows: &[UserMetrics]) -> Result<String> {
    let mut out = String::from("user,precision,recall,serendipity,diversity,unexpectedness\n");
    for r in rows {
        writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{:?}",
            graph.key(r.user)?,
            r.precision,
            r.recall,
            r.serendipity,
            r.diversity,
            r.unexpectedness
        )
        .expect("write to String");
    }
    Ok(out)
}

/// The items whose utility reaches `threshold`, in input order.
pub fn qualifying_items(utilities: &[(NodeId, f64)], threshold: f64) -> Result<Vec<NodeId>> {
    let kept: Vec<NodeId> = utilities.iter().filter(|(_, u)| *u >= threshold).map(|(i, _)| *i).collect();
    if kept.is_empty() {
        return Err(Error::NoQualifiedItems(threshold));
    }
    Ok(kept)
}

/// A user's maximum hull and the items that define it.
#[derive(Debug, Clone)]
pub struct MaxHull {
    pub vertices: HullVertices,
    pub items: Vec<NodeId>,
}

/// Hull of every catalog item whose utility for `user`, scored by `rec`
/// against the user's train-item hull, reaches `threshold`.
pub fn max_hull(rec: &Recommender, user: NodeId, threshold: f64) -> Result<MaxHull> {
    let base = rec.expected_set_for(user, rec.train_items(user))?;
    let scored = score_batch(user, &base.vertices, rec.catalog(), rec.embeddings, rec.model, &rec.cfg, rec.directions())?;
    let utilities: Vec<(NodeId, f64)> = scored.iter().map(|s| (s.item, s.utility)).collect();
    let items = qualifying_items(&utilities, threshold)?;
    let vertices = hull_of(rec.embeddings, &items)?;
    Ok(MaxHull { vertices, items })
}

fn hull_of(embeddings: &EmbeddingTable, items: &[NodeId]) -> Result<HullVertices> {
    let points: Vec<&[f64]> = items.iter().filter_map(|i| embeddings.vector(*i)).collect();
    HullVertices::new(&points)
}

/// Fraction of `probes` contained in `expected`.
pub fn hull_coverage<P: AsRef<[f64]>>(expected: &HullVertices, probes: &[P], eps: f64) -> Result<f64> {
    if probes.is_empty() {
        return Ok(0.0);
    }
    let mut inside = 0usize;
    for p in probes {
        if contains(expected, p.as_ref(), eps)? {
            inside += 1;
        }
    }
    Ok(inside as f64 / probes.len() as f64)
}

/// How each iteration picks the items that join the expected set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GrowthPolicy {
    /// Hybrid-utility Top-N at the given α.
    Hull(f64),
    Random,
    RatingOnly,
}

impl GrowthPolicy {
    pub fn label(&self) -> String {
        match self {
            GrowthPolicy::Hull(a) => format!("lch_alpha_{a}"),
            GrowthPolicy::Random => "random".into(),
            GrowthPolicy::RatingOnly => "rating_only".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxHullExperiment {
    pub policy: GrowthPolicy,
    /// Checkpoints, starting with 0 (the untouched train hulls).
    pub iterations: Vec<usize>,
    pub coverage_curve: Vec<f64>,
    pub std: Vec<f64>,
    pub utility_threshold: f64,
    /// Users with at least one qualifying item.
    pub users: usize,
}

impl MaxHullExperiment {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,mean_coverage,std\n");
        for ((it, m), s) in self.iterations.iter().zip(&self.coverage_curve).zip(&self.std) {
            writeln!(out, "{it},{m:?},{s:?}").expect("write to String");
        }
        out
    }
}

pub struct IterateConfig {
    pub checkpoints: Vec<usize>,
    pub utility_threshold: f64,
    /// α used to score items for the maximum hull.
    pub reference_alpha: f64,
    pub seed: u64,
}

impl Default for IterateConfig {
    fn default() -> Self {
        Self { checkpoints: vec![1, 5, 10, 20, 50], utility_threshold: 0.6, reference_alpha: 0.5, seed: 0 }
    }
}

fn user_curve(
    rec: &Recommender,
    grower: &Recommender,
    policy: GrowthPolicy,
    user: NodeId,
    probes: &MaxHull,
    checkpoints: &[usize],
    seed: u64,
) -> Result<Vec<f64>> {
    let eps = rec.cfg.hull.eps;
    let probe_points: Vec<&[f64]> = probes.items.iter().filter_map(|i| rec.embeddings.vector(*i)).collect();
    let mut covered = vec![false; probe_points.len()];
    let mut expected: Vec<NodeId> = rec.train_items(user).to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (u64::from(user.0) << 32));
    let last = checkpoints.iter().copied().max().unwrap_or(0);
    let mut curve = Vec::with_capacity(checkpoints.len() + 1);
    for iteration in 0..=last {
        if iteration > 0 {
            let exclude: BTreeSet<NodeId> = expected.iter().copied().collect();
            let picked: Vec<NodeId> = match policy {
                GrowthPolicy::Hull(_) => grower.recommend_with(user, &expected)?.item_ids(),
                GrowthPolicy::RatingOnly => {
                    model_top_n(rec.model, user, rec.catalog(), &expected, rec.cfg.top_n)
                }
                GrowthPolicy::Random => {
                    let mut pool: Vec<NodeId> = rec.catalog().iter().copied().filter(|i| !exclude.contains(i)).collect();
                    pool.shuffle(&mut rng);
                    pool.truncate(rec.cfg.top_n);
                    pool
                }
            };
            expected.extend(picked);
        }
        if iteration == 0 || checkpoints.contains(&iteration) {
            // containment only grows with the hull, so covered probes stay covered
            if covered.iter().any(|c| !c) {
                let hull = rec.expected_set_for(user, &expected)?.vertices;
                for (flag, p) in covered.iter_mut().zip(&probe_points) {
                    if !*flag {
                        *flag = contains(&hull, p, eps)?;
                    }
                }
            }
            let n = covered.len().max(1) as f64;
            curve.push(covered.iter().filter(|c| **c).count() as f64 / n);
        }
    }
    Ok(curve)
}

/// Grows every user's expected set with each policy's picks and records the
/// mean maximum-hull coverage at iteration 0 and each checkpoint. Users with
/// no qualifying item are left out.
pub fn iterative_experiment(
    rec: &Recommender,
    users: &[NodeId],
    policies: &[GrowthPolicy],
    cfg: &IterateConfig,
) -> Result<Vec<MaxHullExperiment>> {
    let reference = rec.with_alpha(cfg.reference_alpha)?;
    let max_hulls: Vec<(NodeId, MaxHull)> = users
        .par_iter()
        .filter_map(|&u| {
            match max_hull(&reference, u, cfg.utility_threshold) {
                Ok(h) => Some(Ok((u, h))),
                Err(Error::NoQualifiedItems(_)) => None,
                Err(e) => Some(Err(e)),
            }
        })
        .collect::<Result<_>>()?;
    let mut checkpoints: Vec<usize> = cfg.checkpoints.clone();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    checkpoints.retain(|&c| c > 0);

    let mut out = Vec::new();
    for &policy in policies {
        let alpha = if let GrowthPolicy::Hull(a) = policy { a } else { rec.cfg.alpha };
        let grower = rec.with_alpha(alpha)?;
        let curves: Vec<Vec<f64>> = max_hulls
            .par_iter()
            .map(|(u, h)| user_curve(rec, &grower, policy, *u, h, &checkpoints, cfg.seed))
            .collect::<Result<_>>()?;
        let points = checkpoints.len() + 1;
        let mut mean = vec![0.0; points];
        let mut std = vec![0.0; points];
        if !curves.is_empty() {
            let n = curves.len() as f64;
            for k in 0..points {
                let m = curves.iter().map(|c| c[k]).sum::<f64>() / n;
                let var = curves.iter().map(|c| (c[k] - m).powi(2)).sum::<f64>() / n;
                mean[k] = m;
                std[k] = var.sqrt();
            }
        }
        let mut iterations = vec![0];
        iterations.extend(&checkpoints);
        out.push(MaxHullExperiment {
            policy,
            iterations,
            coverage_curve: mean,
            std,
            utility_threshold: cfg.utility_threshold,
            users: curves.len(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    fn sets(user: u32, items: &[u32]) -> ItemSets {
        BTreeMap::from([(NodeId(user), ids(items))])
    }

    fn rating(u: u32, i: u32, v: f64) -> Rating {
        Rating { user: NodeId(u), item: NodeId(i), value: v, timestamp: None }
    }

    #[test]
    fn rmse_mae_examples() {
        assert_eq!(rmse_mae(&[(3.0, 3.0), (4.0, 4.0)]).unwrap(), (0.0, 0.0));
        assert_eq!(rmse_mae(&[(4.0, 3.0), (2.0, 3.0)]).unwrap(), (1.0, 1.0));
        let (r, m) = rmse_mae(&[(3.0, 3.0), (5.0, 3.0)]).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(m, 1.0);
        assert!(matches!(rmse_mae(&[]), Err(Error::EmptyTest)));
    }

    #[test]
    fn precision_recall_examples() {
        // a..e = 1..5, x = 20, y = 21
        let rs = sets(0, &[1, 2, 3, 4, 5]);
        let test = vec![rating(0, 1, 5.0), rating(0, 20, 4.0), rating(0, 21, 4.5), rating(0, 2, 2.0)];
        let (p, r) = precision_recall_at_n(&rs, &test, 5, 4.0);
        assert!((p - 0.2).abs() < 1e-15);
        assert!((r - 1.0 / 3.0).abs() < 1e-15);
        let full: Vec<Rating> = (1..=5).map(|i| rating(0, i, 5.0)).collect();
        assert_eq!(precision_recall_at_n(&rs, &full, 5, 4.0), (1.0, 1.0));
        let none = vec![rating(0, 9, 5.0)];
        assert_eq!(precision_recall_at_n(&rs, &none, 5, 4.0), (0.0, 0.0));
    }

    #[test]
    fn serendipity_examples() {
        let d = SerendipityDenominator::Recommended;
        let rs = sets(0, &[1, 2, 3, 4]);
        assert_eq!(serendipity_diversity(&rs, &rs, &rs, d).0, 0.0);
        let disjoint = sets(0, &[7, 8]);
        assert_eq!(serendipity_diversity(&rs, &disjoint, &rs, d), (1.0, 1.0));
        let (s, dv) = serendipity_diversity(&rs, &sets(0, &[3, 4, 5]), &sets(0, &[1]), d);
        assert_eq!((s, dv), (0.5, 0.25));
        let (s, dv) = serendipity_diversity(&rs, &sets(0, &[3, 4, 5]), &sets(0, &[1]), SerendipityDenominator::Primitive);
        assert!((s - 2.0 / 3.0).abs() < 1e-15 && (dv - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(serendipity_diversity(&sets(0, &[]), &rs, &rs, d), (0.0, 0.0));
    }

    #[test]
    fn coverage_examples() {
        let mut rs = sets(0, &[1, 2]);
        rs.insert(NodeId(1), ids(&[2, 3, 4]));
        assert_eq!(catalog_coverage(&rs, 10), 0.4);
        assert_eq!(catalog_coverage(&rs, 4), 1.0);
        assert_eq!(catalog_coverage(&ItemSets::new(), 10), 0.0);
    }

    #[test]
    fn qualifying_filter() {
        let u = [(NodeId(1), 0.9), (NodeId(2), 0.5), (NodeId(3), 0.1)];
        assert_eq!(qualifying_items(&u, 0.4).unwrap().len(), 2);
        assert_eq!(qualifying_items(&u, 0.0).unwrap().len(), 3);
        assert!(matches!(qualifying_items(&u, 0.95), Err(Error::NoQualifiedItems(_))));
    }

    #[test]
    fn coverage_of_hulls() {
        let pts = [[0.0, 0.0], [4.0, 0.0], [0.0, 4.0], [4.0, 4.0]];
        let max = HullVertices::new(&pts).unwrap();
        assert_eq!(hull_coverage(&max, &pts, 1e-6).unwrap(), 1.0);
        let lone = HullVertices::new(&[[9.0, 9.0]]).unwrap();
        assert_eq!(hull_coverage(&lone, &pts, 1e-6).unwrap(), 0.0);
        let on_vertex = HullVertices::new(&[[4.0, 4.0]]).unwrap();
        assert_eq!(hull_coverage(&on_vertex, &pts, 1e-6).unwrap(), 0.25);
    }

    #[test]
    fn report_serialisations() {
        let r = MetricsReport {
            rmse: 1.0,
            mae: 0.5,
            precision_at_n: 0.1,
            recall_at_n: 0.2,
            unexpectedness: -0.3,
            serendipity: 0.9,
            diversity: 0.4,
            coverage: 0.7,
            n: 10,
        };
        assert!(r.to_kv_text().contains("unexpectedness = -0.3\n"));
        let row = r.to_csv_row("lch", 0);
        assert_eq!(row.split(',').count(), MetricsReport::csv_header().split(',').count());
    }
}
