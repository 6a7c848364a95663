//! Expected sets, hybrid utility scoring and Top-N ranking.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::graph::{HinGraph, NodeId, NodeType};
use crate::hull::{signed_unexpectedness_with, DirectionSet, HullOptions, HullVertices};
use crate::rating::{Rating, RatingModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolicyKind {
    /// The user plus the items they rated in train.
    #[default]
    Base,
    /// `Base` plus the entities adjacent to the user.
    BaseWithEntities,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpectedSetPolicy {
    pub kind: PolicyKind,
    pub include_user_vertex: bool,
}

impl Default for ExpectedSetPolicy {
    fn default() -> Self {
        Self { kind: PolicyKind::Base, include_user_vertex: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecommenderConfig {
    pub alpha: f64,
    pub top_n: usize,
    /// Min-max both utility components to [0, 1] before blending.
    pub normalize_components: bool,
    pub useful_threshold: f64,
    /// Score at most this many candidates per user (popularity-stratified
    /// sample); `None` scores the whole unseen catalog.
    pub candidate_cap: Option<usize>,
    /// Hulls keep only the most recent vertices beyond this size.
    pub max_hull_vertices: usize,
    pub hull: HullOptions,
    pub seed: u64,
}

impl Default for RecommenderConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            top_n: 10,
            normalize_components: true,
            useful_threshold: 4.0,
            candidate_cap: None,
            max_hull_vertices: 2000,
            hull: HullOptions::default(),
            seed: 0,
        }
    }
}

impl RecommenderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if self.top_n < 1 {
            return Err(Error::InvalidParameter("top_n must be >= 1".into()));
        }
        if self.candidate_cap == Some(0) {
            return Err(Error::InvalidParameter("candidate_cap must be >= 1".into()));
        }
        if self.max_hull_vertices < 1 {
            return Err(Error::InvalidParameter("max_hull_vertices must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredItem {
    pub item: NodeId,
    pub rating_norm: f64,
    pub unexp_norm: f64,
    pub unexpectedness_raw: f64,
    pub utility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationList {
    pub user: NodeId,
    pub items: Vec<ScoredItem>,
    pub n: usize,
}

impl RecommendationList {
    pub fn item_ids(&self) -> Vec<NodeId> {
        self.items.iter().map(|s| s.item).collect()
    }
}

/// The vertex set of one user's latent hull.
#[derive(Debug, Clone)]
pub struct ExpectedSet {
    pub vertices: HullVertices,
    /// Node behind each vertex, in vertex order.
    pub members: Vec<NodeId>,
    /// Requested members that had no embedding.
    pub skipped: usize,
}

fn require_user(graph: &HinGraph, user: NodeId) -> Result<()> {
    match graph.node_type(user) {
        Ok(NodeType::User) => Ok(()),
        _ => Err(Error::UnknownUser(user.to_string())),
    }
}

/// Builds the hull for `user` from the items in `user_items` (oldest first).
/// Items beyond `max_vertices` are dropped from the front.
pub fn expected_set(
    user: NodeId,
    graph: &HinGraph,
    embeddings: &EmbeddingTable,
    user_items: &[NodeId],
    policy: &ExpectedSetPolicy,
    max_vertices: usize,
) -> Result<ExpectedSet> {
    require_user(graph, user)?;
    let mut wanted: Vec<NodeId> = Vec::new();
    if policy.include_user_vertex {
        wanted.push(user);
    }
    if policy.kind == PolicyKind::BaseWithEntities {
        wanted.extend_from_slice(graph.neighbors_by_type(user, NodeType::Entity)?);
    }
    let mut seen: BTreeSet<NodeId> = wanted.iter().copied().collect();
    let items: Vec<NodeId> = user_items.iter().copied().filter(|i| seen.insert(*i)).collect();
    let room = max_vertices.saturating_sub(wanted.len()).max(1);
    let start = items.len().saturating_sub(room);
    wanted.extend_from_slice(&items[start..]);

    let mut members = Vec::with_capacity(wanted.len());
    let mut points: Vec<&[f64]> = Vec::with_capacity(wanted.len());
    let mut skipped = 0;
    for id in wanted {
        match embeddings.vector(id) {
            Some(v) => {
                members.push(id);
                points.push(v);
            }
            None => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("user {user}: {skipped} expected-set members have no embedding");
    }
    let vertices = HullVertices::new(&points)?;
    Ok(ExpectedSet { vertices, members, skipped })
}

pub fn blend(alpha: f64, rating: f64, unexpectedness: f64) -> f64 {
    (1.0 - alpha) * rating + alpha * unexpectedness
}

/// Scores a candidate batch against one hull. Candidates without an
/// embedding are left out.
pub fn score_batch(
    user: NodeId,
    hull: &HullVertices,
    candidates: &[NodeId],
    embeddings: &EmbeddingTable,
    model: &RatingModel,
    cfg: &RecommenderConfig,
    directions: &DirectionSet,
) -> Result<Vec<ScoredItem>> {
    let mut scored = Vec::with_capacity(candidates.len());
    for &item in candidates {
        let Some(v) = embeddings.vector(item) else {
            continue;
        };
        let raw = signed_unexpectedness_with(hull, v, &cfg.hull, directions)?.value;
        let rating = model.predict(user, item);
        scored.push(ScoredItem {
            item,
            rating_norm: model.scale.normalize(rating),
            unexp_norm: raw,
            unexpectedness_raw: raw,
            utility: if cfg.normalize_components { 0.0 } else { blend(cfg.alpha, rating, raw) },
        });
    }
    let (lo, hi) = scored
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.unexpectedness_raw), hi.max(s.unexpectedness_raw)));
    let spread = hi - lo;
    for s in &mut scored {
        s.unexp_norm = if spread > 0.0 { (s.unexpectedness_raw - lo) / spread } else { 0.0 };
        if cfg.normalize_components {
            s.utility = blend(cfg.alpha, s.rating_norm, s.unexp_norm);
        }
    }
    Ok(scored)
}

/// Descending utility; then higher raw unexpectedness (only when α > 0, so
/// that α = 0 reproduces the rating-only order exactly); then ascending id.
pub fn rank_order(alpha: f64) -> impl Fn(&ScoredItem, &ScoredItem) -> Ordering {
    move |a, b| {
        let by_utility = b.utility.total_cmp(&a.utility);
        let by_unexp = if alpha > 0.0 {
            b.unexpectedness_raw.total_cmp(&a.unexpectedness_raw)
        } else {
            Ordering::Equal
        };
        by_utility.then(by_unexp).then(a.item.cmp(&b.item))
    }
}

pub fn recommend_top_n(user: NodeId, mut scored: Vec<ScoredItem>, cfg: &RecommenderConfig) -> RecommendationList {
    scored.sort_by(rank_order(cfg.alpha));
    scored.truncate(cfg.top_n);
    RecommendationList { user, items: scored, n: cfg.top_n }
}

/// Shared read-only state for recommending to many users.
pub struct Recommender<'a> {
    pub graph: &'a HinGraph,
    pub embeddings: &'a EmbeddingTable,
    pub model: &'a RatingModel,
    pub policy: ExpectedSetPolicy,
    pub cfg: RecommenderConfig,
    train_items: BTreeMap<NodeId, Vec<NodeId>>,
    catalog: Vec<NodeId>,
    popularity: HashMap<NodeId, usize>,
    directions: DirectionSet,
}

impl<'a> Recommender<'a> {
    pub fn new(
        graph: &'a HinGraph,
        embeddings: &'a EmbeddingTable,
        model: &'a RatingModel,
        train: &[Rating],
        policy: ExpectedSetPolicy,
        cfg: RecommenderConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let mut train_items: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        let mut popularity: HashMap<NodeId, usize> = HashMap::new();
        let mut ordered: Vec<&Rating> = train.iter().collect();
        // oldest first, so hull truncation keeps the most recent items
        ordered.sort_by_key(|r| r.timestamp.unwrap_or(i64::MIN));
        for r in ordered {
            let list = train_items.entry(r.user).or_default();
            if !list.contains(&r.item) {
                list.push(r.item);
            }
            *popularity.entry(r.item).or_default() += 1;
        }
        let catalog: Vec<NodeId> = graph.nodes_of_type(NodeType::Item).collect();
        let directions = DirectionSet::new(embeddings.dim(), cfg.hull.directions);
        Ok(Self { graph, embeddings, model, policy, cfg, train_items, catalog, popularity, directions })
    }

    /// The same recommender scoring at a different α.
    pub fn with_alpha(&self, alpha: f64) -> Result<Recommender<'a>> {
        let cfg = RecommenderConfig { alpha, ..self.cfg.clone() };
        cfg.validate()?;
        Ok(Recommender {
            graph: self.graph,
            embeddings: self.embeddings,
            model: self.model,
            policy: self.policy,
            cfg,
            train_items: self.train_items.clone(),
            catalog: self.catalog.clone(),
            popularity: self.popularity.clone(),
            directions: self.directions.clone(),
        })
    }

    pub fn catalog(&self) -> &[NodeId] {
        &self.catalog
    }

    pub fn train_items(&self, user: NodeId) -> &[NodeId] {
        self.train_items.get(&user).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn users(&self) -> Vec<NodeId> {
        self.graph.nodes_of_type(NodeType::User).collect()
    }

    pub fn directions(&self) -> &DirectionSet {
        &self.directions
    }

    pub fn expected_set_for(&self, user: NodeId, items: &[NodeId]) -> Result<ExpectedSet> {
        expected_set(user, self.graph, self.embeddings, items, &self.policy, self.cfg.max_hull_vertices)
    }

    /// Unseen catalog items (not in `exclude`), capped by
    /// popularity-stratified sampling when configured.
    pub fn candidates(&self, user: NodeId, exclude: &BTreeSet<NodeId>) -> Vec<NodeId> {
        let unseen: Vec<NodeId> = self.catalog.iter().copied().filter(|i| !exclude.contains(i)).collect();
        match self.cfg.candidate_cap {
            Some(cap) if unseen.len() > cap => {
                let mut by_pop = unseen;
                by_pop.sort_by(|a, b| {
                    let pa = self.popularity.get(a).copied().unwrap_or(0);
                    let pb = self.popularity.get(b).copied().unwrap_or(0);
                    pb.cmp(&pa).then(a.cmp(b))
                });
                let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ (u64::from(user.0) << 32));
                let mut picked: Vec<NodeId> = (0..cap)
                    .filter_map(|s| {
                        let lo = s * by_pop.len() / cap;
                        let hi = (s + 1) * by_pop.len() / cap;
                        by_pop[lo..hi].choose(&mut rng).copied()
                    })
                    .collect();
                picked.sort();
                picked
            }
            _ => unseen,
        }
    }

    /// Top-N for `user` against the hull of `expected` (user's items, oldest
    /// first). Candidates exclude every expected item.
    pub fn recommend_with(&self, user: NodeId, expected: &[NodeId]) -> Result<RecommendationList> {
        let set = self.expected_set_for(user, expected)?;
        let exclude: BTreeSet<NodeId> = expected.iter().copied().collect();
        let candidates = self.candidates(user, &exclude);
        let scored = score_batch(user, &set.vertices, &candidates, self.embeddings, self.model, &self.cfg, &self.directions)?;
        Ok(recommend_top_n(user, scored, &self.cfg))
    }

    pub fn recommend(&self, user: NodeId) -> Result<RecommendationList> {
        self.recommend_with(user, self.train_items(user))
    }

    /// Per-user Top-N in user order, computed in parallel.
    pub fn recommend_all(&self, users: &[NodeId]) -> Result<Vec<RecommendationList>> {
        users.par_iter().map(|&u| self.recommend(u)).collect()
    }

    /// Ranking by predicted rating alone over the same candidates
    /// (descending rating, then ascending id).
    pub fn rating_only(&self, user: NodeId) -> Result<Vec<NodeId>> {
        require_user(self.graph, user)?;
        let exclude: BTreeSet<NodeId> = self.train_items(user).iter().copied().collect();
        let mut cands: Vec<(f64, NodeId)> = self
            .candidates(user, &exclude)
            .into_iter()
            .filter(|i| self.embeddings.contains(*i))
            .map(|i| (self.model.predict(user, i), i))
            .collect();
        cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        Ok(cands.into_iter().take(self.cfg.top_n).map(|(_, i)| i).collect())
    }
}

/// `user_key \t item_key \t utility \t rating_norm \t unexp_raw`, one line
/// per rank.
pub fn recommendations_to_text(graph: &HinGraph, lists: &[RecommendationList]) -> Result<String> {
    let mut out = String::new();
    let mut order: Vec<&RecommendationList> = lists.iter().collect();
    order.sort_by(|a, b| graph.key(a.user).unwrap_or("").cmp(graph.key(b.user).unwrap_or("")));
    for list in order {
        let user = graph.key(list.user)?;
        for s in &list.items {
            writeln!(
                out,
                "{user}\t{}\t{:?}\t{:?}\t{:?}",
                graph.key(s.item)?,
                s.utility,
                s.rating_norm,
                s.unexpectedness_raw
            )
            .expect("write to String");
        }
    }
    Ok(out)
}

pub fn save_recommendations(path: &Path, graph: &HinGraph, lists: &[RecommendationList]) -> Result<()> {
    crate::graph::write_file(path, &recommendations_to_text(graph, lists)?)
}

/// Reads a recommendation file back as ranked item lists per user.
pub fn load_recommendations(path: &Path, graph: &HinGraph) -> Result<Vec<RecommendationList>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lists: Vec<RecommendationList> = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(Error::parse(path, no + 1, "expected 5 tab-separated fields"));
        }
        let user = graph.lookup(fields[0]).ok_or_else(|| Error::parse(path, no + 1, "unknown user key"))?;
        let item = graph.lookup(fields[1]).ok_or_else(|| Error::parse(path, no + 1, "unknown item key"))?;
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::parse(path, no + 1, "bad number"));
        let (utility, rating_norm, raw) = (num(fields[2])?, num(fields[3])?, num(fields[4])?);
        if lists.last().map(|l| l.user) != Some(user) {
            lists.push(RecommendationList { user, items: Vec::new(), n: 0 });
        }
        let list = lists.last_mut().expect("just pushed");
        list.items.push(ScoredItem { item, rating_norm, unexp_norm: f64::NAN, unexpectedness_raw: raw, utility });
        list.n = list.items.len();
    }
    Ok(lists)
}
