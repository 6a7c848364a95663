//! Stage orchestration. Each stage reads the previous stages' files from one
//! output directory and writes its own; the in-memory helpers underneath are
//! public so experiments can skip the disk.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::{DataFormat, PipelineConfig};
use crate::embedding::{train, EmbeddingTable};
use crate::error::{Error, Result};
use crate::eval::{evaluate, iterative_experiment, per_user_csv, GrowthPolicy, ItemSets, MaxHullExperiment, MetricsReport};
use crate::graph::{write_file, HinGraph, NodeId, NodeType};
use crate::ingest::{
    filter_sparse, load_entity_links, load_interactions, load_labels, load_tripadvisor, load_yelp, save_entity_links,
    save_interactions, save_labels, synth_dataset, EntityLink, EntityOrigin, InteractionRecord, TermVocabulary, YelpPaths,
};
use crate::rating::{assign_folds, fit_bias_only, fit_biased_mf, ModelKind, Rating, RatingModel};
use crate::recommend::{load_recommendations, save_recommendations, RecommendationList, Recommender};
use crate::walk::{generate_corpus, WalkCorpus};

pub const INTERACTIONS: &str = "interactions.tsv";
pub const ENTITIES: &str = "entities.tsv";
pub const LABELS: &str = "labels.tsv";
pub const TRAIN: &str = "train.tsv";
pub const TEST: &str = "test.tsv";
pub const CORPUS: &str = "corpus.txt";
pub const EMBEDDINGS: &str = "embeddings.txt";
pub const RATING_MODEL: &str = "rating_model.txt";
pub const PRIMITIVE_MODEL: &str = "primitive_model.txt";
pub const RECOMMENDATIONS: &str = "recommendations.tsv";
pub const RATING_ONLY: &str = "recommendations_rating_only.tsv";
pub const METRICS_TXT: &str = "metrics.txt";
pub const METRICS_CSV: &str = "metrics.csv";
pub const PER_USER_CSV: &str = "per_user.csv";

pub fn user_node_key(key: &str) -> String {
    format!("user:{key}")
}

pub fn item_node_key(key: &str) -> String {
    format!("item:{key}")
}

pub fn entity_node_key(key: &str) -> String {
    format!("entity:{key}")
}

/// Strips the `user:` / `item:` / `entity:` prefix from a graph key.
pub fn raw_key(node_key: &str) -> &str {
    node_key.split_once(':').map(|(_, k)| k).unwrap_or(node_key)
}

/// Splits interaction records into train and test for one fold.
pub fn split_records(
    records: &[InteractionRecord],
    folds: usize,
    fold: usize,
    seed: u64,
) -> Result<(Vec<InteractionRecord>, Vec<InteractionRecord>)> {
    if fold >= folds {
        return Err(Error::InvalidParameter(format!("fold {fold} out of range for {folds} folds")));
    }
    // fold assignment only needs stable ids per key
    let mut users: BTreeMap<&str, u32> = BTreeMap::new();
    let mut items: BTreeMap<&str, u32> = BTreeMap::new();
    for r in records {
        let n = users.len() as u32;
        users.entry(&r.user_key).or_insert(n);
        let n = items.len() as u32;
        items.entry(&r.item_key).or_insert(n);
    }
    let offset = users.len() as u32;
    let ratings: Vec<Rating> = records
        .iter()
        .map(|r| Rating {
            user: NodeId(users[r.user_key.as_str()]),
            item: NodeId(offset + items[r.item_key.as_str()]),
            value: r.rating,
            timestamp: r.timestamp,
        })
        .collect();
    let (assignment, pinned) = assign_folds(&ratings, folds, seed)?;
    if pinned > 0 {
        log::info!("{pinned} records pinned to train so every test user and item is known");
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (r, a) in records.iter().zip(assignment) {
        if a == Some(fold) {
            test.push(r.clone());
        } else {
            train.push(r.clone());
        }
    }
    Ok((train, test))
}

/// Builds the network from train interactions and entity links. Nodes are
/// inserted in key order so ids do not depend on input order.
pub fn build_graph(train: &[InteractionRecord], links: &[EntityLink]) -> Result<HinGraph> {
    let users: BTreeSet<String> = train.iter().map(|r| user_node_key(&r.user_key)).collect();
    let items: BTreeSet<String> = train.iter().map(|r| item_node_key(&r.item_key)).collect();
    let resolve = |source: &str| {
        let i = item_node_key(source);
        if items.contains(&i) {
            return Some(i);
        }
        let u = user_node_key(source);
        users.contains(&u).then_some(u)
    };
    let mut edges: BTreeSet<(String, String)> = BTreeSet::new();
    let mut entities: BTreeSet<String> = BTreeSet::new();
    for r in train {
        edges.insert((user_node_key(&r.user_key), item_node_key(&r.item_key)));
    }
    for l in links {
        if l.origin == EntityOrigin::Friendship {
            let (a, b) = (user_node_key(&l.source_key), user_node_key(&l.entity_key));
            if a != b && users.contains(&a) && users.contains(&b) {
                edges.insert(if a < b { (a, b) } else { (b, a) });
            }
            continue;
        }
        if let Some(src) = resolve(&l.source_key) {
            let e = entity_node_key(&l.entity_key);
            entities.insert(e.clone());
            edges.insert((src, e));
        }
    }
    let mut keyed: Vec<(String, NodeType)> = users
        .into_iter()
        .map(|k| (k, NodeType::User))
        .chain(items.into_iter().map(|k| (k, NodeType::Item)))
        .chain(entities.into_iter().map(|k| (k, NodeType::Entity)))
        .collect();
    keyed.sort();
    let mut g = HinGraph::new();
    for (k, t) in &keyed {
        g.add_node(k, *t)?;
    }
    for (a, b) in &edges {
        let (a, b) = (g.lookup(a).expect("node added"), g.lookup(b).expect("node added"));
        g.add_edge(a, b)?;
    }
    g.freeze();
    Ok(g)
}

/// Maps records onto graph ids; records with an unknown user or item are
/// dropped and counted.
pub fn to_ratings(graph: &HinGraph, records: &[InteractionRecord]) -> (Vec<Rating>, usize) {
    let mut out = Vec::with_capacity(records.len());
    let mut dropped = 0;
    for r in records {
        match (graph.lookup(&user_node_key(&r.user_key)), graph.lookup(&item_node_key(&r.item_key))) {
            (Some(user), Some(item)) => out.push(Rating { user, item, value: r.rating, timestamp: r.timestamp }),
            _ => dropped += 1,
        }
    }
    (out, dropped)
}

pub fn fit_rating_model(cfg: &PipelineConfig, train: &[Rating]) -> Result<RatingModel> {
    let scale = cfg.rating_scale()?;
    match cfg.model_kind() {
        ModelKind::BiasedMf => fit_biased_mf(train, scale, &cfg.mf_config()),
        ModelKind::BiasOnly => fit_bias_only(train, scale, cfg.rating.damping),
    }
}

pub fn train_items(train: &[Rating]) -> ItemSets {
    let mut out: ItemSets = BTreeMap::new();
    for r in train {
        let e = out.entry(r.user).or_default();
        if !e.contains(&r.item) {
            e.push(r.item);
        }
    }
    out
}

/// Everything a recommender run needs, held in memory.
pub struct Prepared {
    pub graph: HinGraph,
    pub train: Vec<Rating>,
    pub test: Vec<Rating>,
    pub embeddings: EmbeddingTable,
    pub model: RatingModel,
    pub primitive: RatingModel,
}

impl Prepared {
    /// Split, graph, walks, embeddings and both rating models.
    pub fn build(cfg: &PipelineConfig, records: &[InteractionRecord], links: &[EntityLink]) -> Result<Self> {
        cfg.validate()?;
        let (train_recs, test_recs) = split_records(records, cfg.split.folds, cfg.split.fold, cfg.seed)?;
        let graph = build_graph(&train_recs, links)?;
        let corpus = generate_corpus(&graph, &cfg.walk_config(), &cfg.transition_matrix()?)?;
        let embeddings = train(&corpus, &cfg.train_config())?;
        Self::assemble(cfg, graph, embeddings, &train_recs, &test_recs)
    }

    fn assemble(
        cfg: &PipelineConfig,
        graph: HinGraph,
        embeddings: EmbeddingTable,
        train_recs: &[InteractionRecord],
        test_recs: &[InteractionRecord],
    ) -> Result<Self> {
        let (train, _) = to_ratings(&graph, train_recs);
        let (test, dropped) = to_ratings(&graph, test_recs);
        if dropped > 0 {
            log::warn!("{dropped} test records reference nodes missing from the train graph");
        }
        let model = fit_rating_model(cfg, &train)?;
        let primitive = fit_bias_only(&train, cfg.rating_scale()?, cfg.rating.damping)?;
        Ok(Prepared { graph, train, test, embeddings, model, primitive })
    }

    pub fn recommender(&self, cfg: &PipelineConfig) -> Result<Recommender<'_>> {
        Recommender::new(&self.graph, &self.embeddings, &self.model, &self.train, cfg.policy(), cfg.recommender_config())
    }

    pub fn evaluate(&self, cfg: &PipelineConfig, lists: &[RecommendationList]) -> Result<(MetricsReport, Vec<crate::eval::UserMetrics>)> {
        let items = train_items(&self.train);
        let catalog: Vec<NodeId> = self.graph.nodes_of_type(NodeType::Item).collect();
        let inputs = crate::eval::EvalInputs {
            test: &self.test,
            model: &self.model,
            primitive: &self.primitive,
            train_items: &items,
            catalog: &catalog,
            n: cfg.recommend.top_n,
            relevance_threshold: cfg.eval.relevance_threshold,
            useful_threshold: cfg.recommend.useful_threshold,
            denominator: cfg.serendipity_denominator(),
        };
        evaluate(lists, &inputs)
    }
}

/// File-backed stages rooted at one output directory.
pub struct Pipeline {
    pub cfg: PipelineConfig,
    pub dir: PathBuf,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig, dir: impl Into<PathBuf>) -> Result<Self> {
        cfg.validate()?;
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self { cfg, dir })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn filter(&self, records: Vec<InteractionRecord>) -> Vec<InteractionRecord> {
        let (kept, stats) = filter_sparse(&records, self.cfg.data.min_count, self.cfg.filter_mode());
        log::info!("sparsity filter removed {} records in {} rounds", stats.removed, stats.rounds);
        kept
    }

    /// Keeps only links whose source survived filtering.
    fn prune_links(records: &[InteractionRecord], links: Vec<EntityLink>) -> Vec<EntityLink> {
        let users: BTreeSet<&str> = records.iter().map(|r| r.user_key.as_str()).collect();
        let items: BTreeSet<&str> = records.iter().map(|r| r.item_key.as_str()).collect();
        links
            .into_iter()
            .filter(|l| items.contains(l.source_key.as_str()) || users.contains(l.source_key.as_str()))
            .collect()
    }

    /// Loads the configured dataset, filters it and writes interactions and
    /// entity links.
    pub fn ingest(&self) -> Result<usize> {
        let data = &self.cfg.data;
        let scale = self.cfg.rating_scale()?;
        let vocab = data.vocabulary.as_deref().map(TermVocabulary::load).transpose()?;
        let reviews = || data.reviews.clone().ok_or_else(|| Error::Config { key: "data.reviews".into(), line: 0, message: "required".into() });
        let (records, links) = match data.format {
            DataFormat::Synth => return self.synth(),
            DataFormat::Yelp => {
                let paths = YelpPaths { reviews: reviews()?, businesses: data.businesses.clone(), users: data.users.clone() };
                let (r, l, stats) = load_yelp(&paths, scale, vocab.as_ref())?;
                log::info!("yelp: {} records, {} malformed, {} off-scale", stats.records, stats.malformed, stats.filtered);
                (r, l)
            }
            DataFormat::Tripadvisor => {
                let (r, l, stats) = load_tripadvisor(&reviews()?, scale, vocab.as_ref())?;
                log::info!("tripadvisor: {} records, {} malformed, {} off-scale", stats.records, stats.malformed, stats.filtered);
                (r, l)
            }
            DataFormat::Tsv => {
                let r = load_interactions(&reviews()?)?;
                let l = match &data.businesses {
                    Some(p) => load_entity_links(p)?,
                    None => Vec::new(),
                };
                (r, l)
            }
        };
        let records = self.filter(records);
        let links = Self::prune_links(&records, links);
        save_interactions(&self.path(INTERACTIONS), &records)?;
        save_entity_links(&self.path(ENTITIES), &links)?;
        Ok(records.len())
    }

    /// Writes a planted-cluster dataset with its ground-truth labels.
    pub fn synth(&self) -> Result<usize> {
        let data = synth_dataset(&self.cfg.synth_config())?;
        let records = self.filter(data.records);
        let links = Self::prune_links(&records, data.links);
        save_interactions(&self.path(INTERACTIONS), &records)?;
        save_entity_links(&self.path(ENTITIES), &links)?;
        save_labels(&self.path(LABELS), &data.labels)?;
        Ok(records.len())
    }

    pub fn build_graph(&self) -> Result<HinGraph> {
        let records = load_interactions(&self.path(INTERACTIONS))?;
        let links = load_entity_links(&self.path(ENTITIES))?;
        let (train, test) = split_records(&records, self.cfg.split.folds, self.cfg.split.fold, self.cfg.seed)?;
        if test.is_empty() {
            return Err(Error::EmptyTest);
        }
        save_interactions(&self.path(TRAIN), &train)?;
        save_interactions(&self.path(TEST), &test)?;
        let g = build_graph(&train, &links)?;
        g.save(&self.dir)?;
        log::info!("graph: {} nodes, {} edges", g.node_count(), g.edge_count());
        Ok(g)
    }

    pub fn walk(&self) -> Result<WalkCorpus> {
        let g = HinGraph::load(&self.dir)?;
        let corpus = generate_corpus(&g, &self.cfg.walk_config(), &self.cfg.transition_matrix()?)?;
        corpus.save(&self.path(CORPUS))?;
        log::info!("corpus: {} walks, {} tokens", corpus.walks.len(), corpus.token_count());
        Ok(corpus)
    }

    pub fn train(&self) -> Result<()> {
        let g = HinGraph::load(&self.dir)?;
        let corpus = WalkCorpus::load(&self.path(CORPUS))?;
        if corpus.graph_fingerprint != g.fingerprint() {
            log::warn!("corpus was generated from a different graph");
        }
        let emb = train(&corpus, &self.cfg.train_config())?;
        emb.save(&self.path(EMBEDDINGS))?;
        let (ratings, _) = to_ratings(&g, &load_interactions(&self.path(TRAIN))?);
        fit_rating_model(&self.cfg, &ratings)?.save(&self.path(RATING_MODEL))?;
        fit_bias_only(&ratings, self.cfg.rating_scale()?, self.cfg.rating.damping)?.save(&self.path(PRIMITIVE_MODEL))?;
        Ok(())
    }

    /// Reloads every stage artifact needed after `train`.
    pub fn load_prepared(&self) -> Result<Prepared> {
        let graph = HinGraph::load(&self.dir)?;
        let embeddings = EmbeddingTable::load(&self.path(EMBEDDINGS))?;
        let (train, _) = to_ratings(&graph, &load_interactions(&self.path(TRAIN))?);
        let (test, _) = to_ratings(&graph, &load_interactions(&self.path(TEST))?);
        let model = RatingModel::load(&self.path(RATING_MODEL))?;
        let primitive = RatingModel::load(&self.path(PRIMITIVE_MODEL))?;
        Ok(Prepared { graph, train, test, embeddings, model, primitive })
    }

    pub fn recommend(&self) -> Result<Vec<RecommendationList>> {
        let prep = self.load_prepared()?;
        let rec = prep.recommender(&self.cfg)?;
        let lists = rec.recommend_all(&rec.users())?;
        save_recommendations(&self.path(RECOMMENDATIONS), &prep.graph, &lists)?;
        Ok(lists)
    }

    /// Top-N by predicted rating alone: `user \t item \t rating` per rank.
    pub fn recommend_rating_only(&self) -> Result<()> {
        let prep = self.load_prepared()?;
        let rec = prep.recommender(&self.cfg)?;
        let mut users = rec.users();
        users.sort_by(|a, b| prep.graph.key(*a).unwrap_or("").cmp(prep.graph.key(*b).unwrap_or("")));
        let mut out = String::new();
        for u in users {
            for item in rec.rating_only(u)? {
                writeln!(out, "{}\t{}\t{:?}", prep.graph.key(u)?, prep.graph.key(item)?, prep.model.predict(u, item))
                    .expect("write to String");
            }
        }
        write_file(&self.path(RATING_ONLY), &out)
    }

    pub fn evaluate(&self) -> Result<MetricsReport> {
        let prep = self.load_prepared()?;
        let lists = load_recommendations(&self.path(RECOMMENDATIONS), &prep.graph)?;
        let (report, per_user) = prep.evaluate(&self.cfg, &lists)?;
        write_file(&self.path(METRICS_TXT), &report.to_kv_text())?;
        let label = format!("hull_alpha_{}", self.cfg.recommend.alpha);
        write_file(
            &self.path(METRICS_CSV),
            &format!("{}\n{}\n", MetricsReport::csv_header(), report.to_csv_row(&label, self.cfg.split.fold)),
        )?;
        write_file(&self.path(PER_USER_CSV), &per_user_csv(&prep.graph, &per_user)?)?;
        Ok(report)
    }

    pub fn iterate(&self) -> Result<Vec<MaxHullExperiment>> {
        let prep = self.load_prepared()?;
        let rec = prep.recommender(&self.cfg)?;
        let policies = [GrowthPolicy::Hull(self.cfg.lch_alpha()), GrowthPolicy::Random, GrowthPolicy::RatingOnly];
        let results = iterative_experiment(&rec, &rec.users(), &policies, &self.cfg.iterate_config())?;
        for r in &results {
            let name = match r.policy {
                GrowthPolicy::Hull(_) => "lch",
                GrowthPolicy::Random => "random",
                GrowthPolicy::RatingOnly => "rating_only",
            };
            write_file(&self.path(&format!("coverage_{name}.csv")), &r.to_csv())?;
        }
        Ok(results)
    }

    /// `synth` (or `ingest`) through `evaluate`.
    pub fn run_all(&self) -> Result<MetricsReport> {
        if self.cfg.data.format == DataFormat::Synth {
            self.synth()?;
        } else {
            self.ingest()?;
        }
        self.build_graph()?;
        self.walk()?;
        self.train()?;
        self.recommend()?;
        self.evaluate()
    }
}

/// Cluster label per graph node, for synthetic runs.
pub fn node_labels(graph: &HinGraph, labels_path: &Path) -> Result<HashMap<NodeId, usize>> {
    let labels = load_labels(labels_path)?;
    Ok(graph
        .node_ids()
        .filter_map(|id| {
            let key = graph.key(id).ok()?;
            labels.get(raw_key(key)).map(|c| (id, *c))
        })
        .collect())
}
