//! One check per acceptance criterion. Each returns whether it held plus a
//! one-line summary of what was measured.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use hullrec_core::config::DataFormat;
use hullrec_core::embedding::{sgns_gradients, sgns_loss};
use hullrec_core::eval::{
    catalog_coverage, iterative_experiment, precision_recall_at_n, rmse_mae, serendipity_diversity,
    GrowthPolicy, ItemSets, SerendipityDenominator,
};
use hullrec_core::ingest::{filter_sparse, synth_dataset, FilterMode};
use hullrec_core::walk::generate_corpus;
use hullrec_core::{
    EmbeddingTable, HinGraph, HullVertices, InteractionRecord, NodeId, NodeType, Pipeline, PipelineConfig, Prepared,
    Rating, TransitionMatrix, WalkConfig,
};

use super::oracles::{exact_qp_distance, grid_distance, signed_distance_2d, convex_hull_2d};

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn neg_refs(negs: &[Vec<f64>]) -> Vec<&[f64]> {
    negs.iter().map(Vec::as_slice).collect()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

// ---------------------------------------------------------------------------
// hull projection against the exact QP and the simplex grid

pub fn hull_projection(instances: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut cases = Vec::with_capacity(instances);
    for _ in 0..instances {
        let dim = rng.random_range(2..=4usize);
        let m = rng.random_range(1..=6usize);
        let vertices: Vec<Vec<f64>> = (0..m).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let query: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect();
        cases.push((vertices, query));
    }
    let start = Instant::now();
    let solved: Vec<f64> = cases
        .iter()
        .map(|(v, q)| HullVertices::new(v).and_then(|h| h.project(q)).map(|p| p.distance).unwrap_or(f64::NAN))
        .collect();
    let solve_time = start.elapsed();
    let (mut worst_exact, mut worst_grid, mut interior) = (0.0f64, 0.0f64, 0);
    for ((v, q), d) in cases.iter().zip(&solved) {
        let exact = exact_qp_distance(v, q);
        let grid = grid_distance(v, q);
        worst_exact = worst_exact.max((d - exact).abs());
        worst_grid = worst_grid.max((d - grid).abs());
        if exact < 1e-9 {
            interior += 1;
        }
    }
    let total = start.elapsed();
    let pass = worst_exact <= 1e-6 && worst_grid <= 1e-2 && !worst_exact.is_nan() && total.as_secs_f64() < 10.0;
    Outcome::new(
        pass,
        format!(
            "{instances} instances ({interior} inside): max |fw - qp| {worst_exact:.2e} (<= 1e-6), max |fw - grid| {worst_grid:.2e} (<= 1e-2), solver {}, total {} (< 10s)",
            secs(solve_time),
            secs(total)
        ),
    )
}

// ---------------------------------------------------------------------------
// signed distance in the plane

fn random_polygon(rng: &mut ChaCha8Rng, corners: usize) -> Vec<[f64; 2]> {
    loop {
        let pts: Vec<[f64; 2]> = (0..corners).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let hull = convex_hull_2d(&pts);
        if hull.len() != corners {
            continue;
        }
        let area: f64 = (0..hull.len())
            .map(|i| {
                let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
            / 2.0;
        if area > 0.05 {
            return pts;
        }
    }
}

pub fn signed_distance_plane(instances: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut sign_ok, mut worst_out, mut worst_in, mut inside) = (0usize, 0.0f64, 0.0f64, 0usize);
    let start = Instant::now();
    for n in 0..instances {
        let poly = random_polygon(&mut rng, 3 + n % 2);
        // half the queries are drawn inside the polygon
        let query = if n % 4 < 2 {
            let w: Vec<f64> = (0..poly.len()).map(|_| rng.random_range(0.05..1.0)).collect();
            let z: f64 = w.iter().sum();
            [
                poly.iter().zip(&w).map(|(p, w)| p[0] * w / z).sum(),
                poly.iter().zip(&w).map(|(p, w)| p[1] * w / z).sum(),
            ]
        } else {
            [rng.random_range(-1.6..1.6), rng.random_range(-1.6..1.6)]
        };
        let truth = signed_distance_2d(&poly, query);
        let hull = HullVertices::new(&poly).expect("polygon");
        let got = hullrec_core::hull::signed_unexpectedness(&hull, &query).expect("signed distance");
        if (truth < 0.0) == got.interior && (truth < 0.0) == (got.value < 0.0) {
            sign_ok += 1;
        }
        if truth < 0.0 {
            inside += 1;
            worst_in = worst_in.max((got.value - truth).abs() / truth.abs());
        } else {
            worst_out = worst_out.max((got.value - truth).abs());
        }
    }
    let pass = sign_ok == instances && worst_out <= 1e-6 && worst_in <= 0.15;
    Outcome::new(
        pass,
        format!(
            "{instances} polygons ({inside} interior queries): sign {sign_ok}/{instances}, exterior max err {worst_out:.2e} (<= 1e-6), interior max rel err {:.1}% (<= 15%), {}",
            100.0 * worst_in,
            secs(start.elapsed())
        ),
    )
}

// ---------------------------------------------------------------------------
// skip-gram gradients

fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let na: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nb: f64 = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-8)
}

/// Central differences of `f` over every coordinate of `x`.
fn numeric_grad(x: &[f64], h: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            probe[k] = x[k] + h;
            let up = f(&probe);
            probe[k] = x[k] - h;
            let down = f(&probe);
            probe[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn sgns_gradient_check(cases: usize) -> Outcome {
    let dim = 4;
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 0.0f64;
    let mut worst_step = 0.0f64;
    for _ in 0..cases {
        let negatives = rng.random_range(1..=5usize);
        let vec = |rng: &mut ChaCha8Rng| (0..dim).map(|_| normal(rng)).collect::<Vec<f64>>();
        let center = vec(&mut rng);
        let context = vec(&mut rng);
        let negs: Vec<Vec<f64>> = (0..negatives).map(|_| vec(&mut rng)).collect();

        let (g_center, g_context, g_negs) = sgns_gradients(&center, &context, &neg_refs(&negs));
        let n_center = numeric_grad(&center, h, |x| sgns_loss(x, &context, &neg_refs(&negs)));
        let n_context = numeric_grad(&context, h, |x| sgns_loss(&center, x, &neg_refs(&negs)));
        worst = worst.max(rel_err(&g_center, &n_center)).max(rel_err(&g_context, &n_context));
        for j in 0..negatives {
            let n_neg = numeric_grad(&negs[j], h, |x| {
                let mut swapped = negs.clone();
                swapped[j] = x.to_vec();
                sgns_loss(&center, &context, &neg_refs(&swapped))
            });
            worst = worst.max(rel_err(&g_negs[j], &n_neg));
        }

        // the training update must move the center row by -lr times the
        // same gradient (distinct negatives only, so rows do not alias)
        let ids: Vec<NodeId> = (0..negatives as u32 + 2).map(NodeId).collect();
        let mut rows = vec![(ids[0], center.clone()), (ids[1], vec![0.0; dim])];
        rows.extend((0..negatives).map(|j| (ids[j + 2], vec![0.0; dim])));
        let mut table = EmbeddingTable::from_vectors(rows).expect("table");
        table.output_vector_mut(ids[1]).expect("row").copy_from_slice(&context);
        for j in 0..negatives {
            table.output_vector_mut(ids[j + 2]).expect("row").copy_from_slice(&negs[j]);
        }
        let lr = 1e-3;
        table.sgns_pair_step(ids[0], ids[1], &ids[2..], lr).expect("step");
        let moved: Vec<f64> =
            table.vector(ids[0]).expect("row").iter().zip(&center).map(|(after, before)| (before - after) / lr).collect();
        worst_step = worst_step.max(rel_err(&moved, &n_center));
    }
    let pass = worst <= 1e-4 && worst_step <= 1e-4;
    Outcome::new(
        pass,
        format!("{cases} cases, d = {dim}, h = {h:e}: max relative error {worst:.2e} (<= 1e-4), update step {worst_step:.2e}"),
    )
}

// ---------------------------------------------------------------------------
// walk transition statistics

/// Two nodes of each type; every node has exactly one neighbour of every
/// type, so the step type probabilities are the renormalised coefficients.
pub fn all_types_graph() -> HinGraph {
    let mut g = HinGraph::new();
    let u: Vec<NodeId> = (0..2).map(|k| g.add_node(&format!("user:u{k}"), NodeType::User).unwrap()).collect();
    let i: Vec<NodeId> = (0..2).map(|k| g.add_node(&format!("item:i{k}"), NodeType::Item).unwrap()).collect();
    let e: Vec<NodeId> = (0..2).map(|k| g.add_node(&format!("entity:e{k}"), NodeType::Entity).unwrap()).collect();
    for (a, b) in [(u[0], u[1]), (i[0], i[1]), (e[0], e[1])] {
        g.add_edge(a, b).unwrap();
    }
    for k in 0..2 {
        g.add_edge(u[k], i[k]).unwrap();
        g.add_edge(u[k], e[k]).unwrap();
        g.add_edge(i[k], e[k]).unwrap();
    }
    g.freeze();
    g
}

/// Counts of (from type, to type) over every step of a corpus.
pub fn type_pair_counts(g: &HinGraph, tm: &TransitionMatrix, steps: usize, seed: u64) -> [[u64; 3]; 3] {
    let walk_length = 101;
    let per_node = steps.div_ceil(g.node_count() * (walk_length - 1));
    let cfg = WalkConfig { walks_per_node: per_node, walk_length, seed };
    let corpus = generate_corpus(g, &cfg, tm).expect("corpus");
    let mut counts = [[0u64; 3]; 3];
    for walk in &corpus.walks {
        for pair in walk.windows(2) {
            let a = g.node_type(pair[0]).unwrap().index();
            let b = g.node_type(pair[1]).unwrap().index();
            counts[a][b] += 1;
        }
    }
    counts
}

pub fn walk_statistics(steps: usize) -> Outcome {
    let g = all_types_graph();
    // uu, ue, ui, ei, ee, ii
    let tm = TransitionMatrix::new(0.05, 0.10, 0.25, 0.20, 0.15, 0.25).unwrap();
    let counts = type_pair_counts(&g, &tm, steps, 404);
    let total: u64 = counts.iter().flatten().sum();
    let mut worst_z = 0.0f64;
    for a in NodeType::ALL {
        let row = &counts[a.index()];
        let n: u64 = row.iter().sum();
        let z_row: f64 = NodeType::ALL.iter().map(|&b| tm.get(a, b)).sum();
        for b in NodeType::ALL {
            let p = tm.get(a, b) / z_row;
            let observed = row[b.index()] as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            worst_z = worst_z.max((observed - p).abs() / se);
        }
    }
    let no_ee = TransitionMatrix::new(0.10, 0.10, 0.30, 0.25, 0.0, 0.25).unwrap();
    let ee = type_pair_counts(&g, &no_ee, steps, 405);
    let ee_steps = ee[NodeType::Entity.index()][NodeType::Entity.index()];
    let pass = total as usize >= steps && worst_z <= 3.0 && ee_steps == 0;
    Outcome::new(
        pass,
        format!("{total} steps: max |observed - expected| = {worst_z:.2} standard errors (<= 3); E-E steps with C_EE = 0: {ee_steps}"),
    )
}

// ---------------------------------------------------------------------------
// α = 0 equals the rating-only ranking

/// Users whose α = 0 Top-N differs from the rating-only Top-N.
pub fn endpoint_mismatches(prep: &Prepared, cfg: &PipelineConfig) -> (usize, usize) {
    let mut cfg = cfg.clone();
    cfg.recommend.alpha = 0.0;
    let rec = prep.recommender(&cfg).expect("recommender");
    let users = rec.users();
    let lists = rec.recommend_all(&users).expect("recommend");
    let mismatched = lists
        .iter()
        .filter(|l| l.item_ids() != rec.rating_only(l.user).expect("rating only"))
        .count();
    (users.len(), mismatched)
}

pub fn prepare_synthetic(cfg: &PipelineConfig) -> Prepared {
    let data = synth_dataset(&cfg.synth_config()).expect("synth");
    let (records, _) = filter_sparse(&data.records, cfg.data.min_count, cfg.filter_mode());
    Prepared::build(cfg, &records, &data.links).expect("prepare")
}

/// Runs the file pipeline up to trained models for a bundled sample.
pub fn prepare_sample(cfg: &PipelineConfig, dir: &Path) -> Prepared {
    let p = Pipeline::new(cfg.clone(), dir).expect("pipeline");
    p.ingest().expect("ingest");
    p.build_graph().expect("graph");
    p.walk().expect("walk");
    p.train().expect("train");
    p.load_prepared().expect("load")
}

pub fn alpha_endpoint() -> Outcome {
    let start = Instant::now();
    let base = super::synthetic_config();
    let mut fixtures: Vec<(String, PipelineConfig, Prepared)> = Vec::new();
    let synthetic = prepare_synthetic(&base);
    let mut entities = base.clone();
    entities.recommend.policy = hullrec_core::config::PolicyChoice::BaseWithEntities;
    let mut capped = base.clone();
    capped.recommend.candidate_cap = Some(40);
    let mut no_norm = base.clone();
    no_norm.recommend.normalize_components = false;
    let mut report = Vec::new();
    let mut pass = true;
    for (name, cfg) in [("synthetic", &base), ("synthetic+entities", &entities), ("synthetic+cap", &capped), ("synthetic+raw", &no_norm)] {
        let (users, bad) = endpoint_mismatches(&synthetic, cfg);
        pass &= bad == 0 && users > 0;
        report.push(format!("{name} {}/{users}", users - bad));
    }
    for format in [DataFormat::Yelp, DataFormat::Tripadvisor] {
        let dir = tempfile::tempdir().expect("tempdir");
        let cfg = super::sample_config(format);
        let prep = prepare_sample(&cfg, dir.path());
        fixtures.push((format!("{format:?}").to_lowercase(), cfg, prep));
    }
    for (name, cfg, prep) in &fixtures {
        let (users, bad) = endpoint_mismatches(prep, cfg);
        pass &= bad == 0 && users > 0;
        report.push(format!("{name} {}/{users}", users - bad));
    }
    Outcome::new(pass, format!("identical Top-N lists per fixture: {}, {}", report.join(", "), secs(start.elapsed())))
}

// ---------------------------------------------------------------------------
// unexpectedness / accuracy trade-off

pub fn tradeoff() -> Outcome {
    let start = Instant::now();
    let cfg = super::synthetic_config();
    let prep = prepare_synthetic(&cfg);
    let mut rows = Vec::new();
    for alpha in [0.0, 0.5] {
        let mut c = cfg.clone();
        c.recommend.alpha = alpha;
        let rec = prep.recommender(&c).expect("recommender");
        let lists = rec.recommend_all(&rec.users()).expect("recommend");
        let (report, _) = prep.evaluate(&c, &lists).expect("evaluate");
        rows.push(report);
    }
    let elapsed = start.elapsed();
    let (ro, ch) = (&rows[0], &rows[1]);
    let degradation = (ch.rmse - ro.rmse) / ro.rmse;
    let pass = ch.unexpectedness > ro.unexpectedness
        && ch.coverage > ro.coverage
        && degradation <= 0.10
        && elapsed.as_secs_f64() < 300.0;
    Outcome::new(
        pass,
        format!(
            "alpha 0 -> 0.5: unexpectedness {:.3} -> {:.3}, coverage {:.3} -> {:.3}, rmse {:.4} -> {:.4} ({:+.1}%, <= 10%), serendipity {:.3} -> {:.3}, {} (< 300s)",
            ro.unexpectedness,
            ch.unexpectedness,
            ro.coverage,
            ch.coverage,
            ro.rmse,
            ch.rmse,
            100.0 * degradation,
            ro.serendipity,
            ch.serendipity,
            secs(elapsed)
        ),
    )
}

// ---------------------------------------------------------------------------
// iterative maximum-hull coverage

pub fn hull_coverage_ordering() -> Outcome {
    let start = Instant::now();
    let cfg = super::synthetic_config();
    let prep = prepare_synthetic(&cfg);
    let rec = prep.recommender(&cfg).expect("recommender");
    let policies = [GrowthPolicy::Hull(0.5), GrowthPolicy::Random, GrowthPolicy::RatingOnly];
    let results = iterative_experiment(&rec, &rec.users(), &policies, &cfg.iterate_config()).expect("experiment");
    let elapsed = start.elapsed();
    let at = |r: &hullrec_core::MaxHullExperiment, it: usize| {
        r.iterations.iter().position(|&i| i == it).map(|k| r.coverage_curve[k]).unwrap_or(f64::NAN)
    };
    let monotone = results.iter().all(|r| r.coverage_curve.windows(2).all(|w| w[1] >= w[0]));
    let (lch, random) = (at(&results[0], 10), at(&results[1], 10));
    let pass = monotone && lch > random && results[0].users > 0 && elapsed.as_secs_f64() < 600.0;
    let curves: Vec<String> = results
        .iter()
        .map(|r| {
            let pts: Vec<String> = r.coverage_curve.iter().map(|c| format!("{c:.3}")).collect();
            format!("{} [{}]", r.policy.label(), pts.join(" "))
        })
        .collect();
    Outcome::new(
        pass,
        format!(
            "{} users; at iteration 10 LCH {lch:.3} vs random {random:.3}; nondecreasing {monotone}; {}; {} (< 600s)",
            results[0].users,
            curves.join("; "),
            secs(elapsed)
        ),
    )
}

// ---------------------------------------------------------------------------
// metric arithmetic

fn sets(pairs: &[(u32, &[u32])]) -> ItemSets {
    pairs.iter().map(|(u, items)| (NodeId(*u), items.iter().map(|&i| NodeId(i)).collect())).collect()
}

/// The worked counting examples, evaluated exactly.
pub fn worked_examples() -> Vec<(&'static str, bool)> {
    let mut out = Vec::new();
    let (r, m) = rmse_mae(&[(1.0, 0.0), (0.0, 1.0)]).unwrap();
    out.push(("errors {+1, -1}: rmse 1, mae 1", r == 1.0 && m == 1.0));
    let (r, m) = rmse_mae(&[(0.0, 0.0), (2.0, 0.0)]).unwrap();
    out.push(("errors {0, 2}: rmse sqrt 2, mae 1", r == 2f64.sqrt() && m == 1.0));

    // user 0; a..e = 10..14, x = 20, y = 21
    let rs = sets(&[(0, &[10, 11, 12, 13, 14])]);
    let test: Vec<Rating> = [(10, 5.0), (20, 4.0), (21, 4.5), (12, 2.0)]
        .iter()
        .map(|&(i, v)| Rating { user: NodeId(0), item: NodeId(i), value: v, timestamp: None })
        .collect();
    let (p, rc) = precision_recall_at_n(&rs, &test, 5, 4.0);
    out.push(("precision 0.2, recall 1/3", p == 0.2 && rc == 1.0 / 3.0));

    let den = SerendipityDenominator::Recommended;
    let rs = sets(&[(0, &[1, 2, 3])]);
    let (s, _) = serendipity_diversity(&rs, &rs, &sets(&[(0, &[1, 2, 3])]), den);
    out.push(("RS = PM: serendipity 0", s == 0.0));
    let (s, d) = serendipity_diversity(&rs, &sets(&[(0, &[7, 8])]), &sets(&[(0, &[1, 2, 3])]), den);
    out.push(("disjoint and useful: serendipity 1, diversity 1", s == 1.0 && d == 1.0));
    // a..e = 1..5
    let (s, d) = serendipity_diversity(&sets(&[(0, &[1, 2, 3, 4])]), &sets(&[(0, &[3, 4, 5])]), &sets(&[(0, &[1])]), den);
    out.push(("serendipity 0.5, diversity 0.25", s == 0.5 && d == 0.25));
    let c = catalog_coverage(&sets(&[(0, &[1, 2]), (1, &[2, 3])]), 6);
    out.push(("coverage 3 of 6", c == 0.5));
    out
}

fn random_sets(rng: &mut ChaCha8Rng, users: u32, catalog: u32, max_len: usize) -> ItemSets {
    (0..users)
        .map(|u| {
            let len = rng.random_range(0..=max_len);
            let mut items: BTreeSet<u32> = BTreeSet::new();
            while items.len() < len.min(catalog as usize) {
                items.insert(rng.random_range(0..catalog));
            }
            (NodeId(u), items.into_iter().map(NodeId).collect())
        })
        .collect()
}

/// Random inputs for the inequalities; returns (cases, violations).
pub fn metric_inequalities(cases: usize) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut violations = 0;
    for _ in 0..cases {
        let len = rng.random_range(1..50);
        let pairs: Vec<(f64, f64)> = (0..len).map(|_| (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0))).collect();
        let (r, m) = rmse_mae(&pairs).unwrap();
        if r < m {
            violations += 1;
        }
        let users = rng.random_range(1..6);
        let rs = random_sets(&mut rng, users, 20, 10);
        let pm = random_sets(&mut rng, users, 20, 10);
        let useful = random_sets(&mut rng, users, 20, 15);
        for den in [SerendipityDenominator::Recommended, SerendipityDenominator::Primitive] {
            let (s, d) = serendipity_diversity(&rs, &pm, &useful, den);
            if s < d {
                violations += 1;
            }
        }
    }
    (cases, violations)
}

pub fn metric_arithmetic() -> Outcome {
    let examples = worked_examples();
    let failed: Vec<&str> = examples.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    let (cases, violations) = metric_inequalities(2000);
    let pass = failed.is_empty() && violations == 0;
    let mut detail = format!(
        "{}/{} worked examples exact; {violations} violations of rmse >= mae or serendipity >= diversity in {cases} random cases",
        examples.len() - failed.len(),
        examples.len()
    );
    if !failed.is_empty() {
        detail.push_str(&format!("; failed: {}", failed.join(", ")));
    }
    Outcome::new(pass, detail)
}

// ---------------------------------------------------------------------------
// determinism

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).expect("read dir") {
        let path = entry.expect("entry").path();
        if path.is_file() {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            out.insert(name, std::fs::read(&path).expect("read artifact"));
        }
    }
    out
}

pub fn run_pipeline(cfg: &PipelineConfig, dir: &Path) {
    let p = Pipeline::new(cfg.clone(), dir).expect("pipeline");
    p.run_all().expect("run");
    p.recommend_rating_only().expect("rating only");
}

pub fn determinism() -> Outcome {
    let start = Instant::now();
    let cfg = super::synthetic_config();
    let (a, b) = (tempfile::tempdir().expect("tempdir"), tempfile::tempdir().expect("tempdir"));
    run_pipeline(&cfg, a.path());
    run_pipeline(&cfg, b.path());
    let (first, second) = (artifacts(a.path()), artifacts(b.path()));
    let differing: Vec<&String> = first.keys().filter(|k| first.get(*k) != second.get(*k)).collect();
    let pass = !first.is_empty() && first.len() == second.len() && differing.is_empty();
    let bytes: usize = first.values().map(Vec::len).sum();
    let mut detail = format!("{} artifacts ({bytes} bytes) compared across two runs, {} differ, {}", first.len(), differing.len(), secs(start.elapsed()));
    if !differing.is_empty() {
        detail.push_str(&format!(": {differing:?}"));
    }
    Outcome::new(pass, detail)
}

// ---------------------------------------------------------------------------
// sparsity filter

fn record(user: String, item: String) -> InteractionRecord {
    InteractionRecord { user_key: user, item_key: item, rating: 4.0, timestamp: None, review_text: None }
}

/// A dense core plus a chain in which every removal pushes the next node
/// below the threshold: user `w0` starts one rating short, item `x1` loses
/// its fifth rating with `w0`, user `w1` loses its fifth with `x1`, and so on.
pub fn chain_fixture(links: usize, min_count: usize) -> Vec<InteractionRecord> {
    let core_users: Vec<String> = (0..min_count + 1).map(|k| format!("core_u{k}")).collect();
    let core_items: Vec<String> = (0..min_count + 1).map(|k| format!("core_i{k}")).collect();
    let mut recs = Vec::new();
    for u in &core_users {
        for i in &core_items {
            recs.push(record(u.clone(), i.clone()));
        }
    }
    let fill = min_count - 2;
    for k in 0..=links {
        let user = format!("w{k}");
        // w0 and wL touch one chain item, the rest two
        let chain_items = usize::from(k > 0) + usize::from(k < links);
        let core = if k == 0 { fill } else { min_count - chain_items };
        for i in &core_items[..core] {
            recs.push(record(user.clone(), i.clone()));
        }
        if k < links {
            let item = format!("x{}", k + 1);
            recs.push(record(user.clone(), item.clone()));
            recs.push(record(format!("w{}", k + 1), item.clone()));
            for u in &core_users[..fill] {
                recs.push(record(u.clone(), item.clone()));
            }
        }
    }
    recs
}

/// Users and items left with fewer than `min_count` records.
pub fn sparse_survivors(records: &[InteractionRecord], min_count: usize) -> usize {
    let mut users: BTreeMap<&str, usize> = BTreeMap::new();
    let mut items: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        *users.entry(&r.user_key).or_default() += 1;
        *items.entry(&r.item_key).or_default() += 1;
    }
    users.values().chain(items.values()).filter(|&&c| c < min_count).count()
}

pub fn sparsity_fixed_point() -> Outcome {
    let min_count = 5;
    let fixture = chain_fixture(6, min_count);
    let (single, _) = filter_sparse(&fixture, min_count, FilterMode::SinglePass);
    let (fixed, stats) = filter_sparse(&fixture, min_count, FilterMode::FixedPoint);
    let left_single = sparse_survivors(&single, min_count);
    let left_fixed = sparse_survivors(&fixed, min_count);
    let core_only = fixed.iter().all(|r| r.user_key.starts_with("core_") && r.item_key.starts_with("core_"));
    let core_size = (min_count + 1) * (min_count + 1);
    let pass = left_fixed == 0 && left_single > 0 && core_only && fixed.len() == core_size;
    Outcome::new(
        pass,
        format!(
            "chain of {} records: fixed point after {} rounds keeps {} (core {core_size}), {left_fixed} sparse nodes left; a single pass leaves {left_single}",
            fixture.len(),
            stats.rounds,
            fixed.len()
        ),
    )
}
