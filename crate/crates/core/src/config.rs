//! Pipeline configuration, read from sectioned `key = value` (TOML) text.
//! Every key has a default; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embedding::TrainConfig;
use crate::error::{Error, Result};
use crate::eval::{IterateConfig, SerendipityDenominator};
use crate::hull::HullOptions;
use crate::ingest::{FilterMode, SynthConfig};
use crate::rating::{MfConfig, ModelKind, RatingScale};
use crate::recommend::{ExpectedSetPolicy, PolicyKind, RecommenderConfig};
use crate::walk::{TransitionMatrix, WalkConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    #[default]
    Synth,
    Yelp,
    Tripadvisor,
    /// Pre-built `user \t item \t rating \t timestamp` file.
    Tsv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub format: DataFormat,
    /// Yelp review file, TripAdvisor file, or interaction TSV.
    pub reviews: Option<PathBuf>,
    pub businesses: Option<PathBuf>,
    pub users: Option<PathBuf>,
    pub vocabulary: Option<PathBuf>,
    pub rating_min: f64,
    pub rating_max: f64,
    pub min_count: usize,
    pub single_pass_filter: bool,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            format: DataFormat::Synth,
            reviews: None,
            businesses: None,
            users: None,
            vocabulary: None,
            rating_min: 1.0,
            rating_max: 5.0,
            min_count: 5,
            single_pass_filter: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    pub folds: usize,
    pub fold: usize,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self { folds: 5, fold: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Coefficients {
    pub uu: f64,
    pub ue: f64,
    pub ui: f64,
    pub ei: f64,
    pub ee: f64,
    pub ii: f64,
}

impl Default for Coefficients {
    fn default() -> Self {
        let s = 1.0 / 6.0;
        Self { uu: s, ue: s, ui: s, ei: s, ee: s, ii: s }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkSection {
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub coefficients: Coefficients,
}

impl Default for WalkSection {
    fn default() -> Self {
        Self { walks_per_node: 10, walk_length: 100, coefficients: Coefficients::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub dim: usize,
    pub window: usize,
    pub min_count: u64,
    pub epochs: usize,
    pub negatives: usize,
    pub learning_rate: f64,
    pub min_learning_rate: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            dim: d.dim,
            window: d.window,
            min_count: d.min_count,
            epochs: d.epochs,
            negatives: d.negatives,
            learning_rate: d.learning_rate,
            min_learning_rate: d.min_learning_rate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    #[default]
    BiasedMf,
    BiasOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatingSection {
    pub model: ModelChoice,
    pub k: usize,
    pub epochs: usize,
    pub lr: f64,
    pub reg: f64,
    pub init_std: f64,
    pub damping: f64,
}

impl Default for RatingSection {
    fn default() -> Self {
        let d = MfConfig::default();
        Self {
            model: ModelChoice::BiasedMf,
            k: d.k,
            epochs: d.epochs,
            lr: d.lr,
            reg: d.reg,
            init_std: d.init_std,
            damping: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyChoice {
    #[default]
    Base,
    BaseWithEntities,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecommendSection {
    pub alpha: f64,
    pub top_n: usize,
    pub normalize_components: bool,
    pub useful_threshold: f64,
    pub candidate_cap: Option<usize>,
    pub max_hull_vertices: usize,
    pub policy: PolicyChoice,
    pub include_user_vertex: bool,
}

impl Default for RecommendSection {
    fn default() -> Self {
        let d = RecommenderConfig::default();
        Self {
            alpha: d.alpha,
            top_n: d.top_n,
            normalize_components: d.normalize_components,
            useful_threshold: d.useful_threshold,
            candidate_cap: d.candidate_cap,
            max_hull_vertices: d.max_hull_vertices,
            policy: PolicyChoice::Base,
            include_user_vertex: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HullSection {
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub eps: f64,
    pub directions: usize,
}

impl Default for HullSection {
    fn default() -> Self {
        let d = HullOptions::default();
        Self { tol: d.tol, max_iter: d.max_iter, eps: d.eps, directions: d.directions }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenominatorChoice {
    #[default]
    Recommended,
    Primitive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub relevance_threshold: f64,
    pub serendipity_denominator: DenominatorChoice,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { relevance_threshold: 4.0, serendipity_denominator: DenominatorChoice::Recommended }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IterateSection {
    pub checkpoints: Vec<usize>,
    pub utility_threshold: f64,
    pub reference_alpha: f64,
    /// α of the hull policy; defaults to `recommend.alpha`.
    pub lch_alpha: Option<f64>,
}

impl Default for IterateSection {
    fn default() -> Self {
        let d = IterateConfig::default();
        Self {
            checkpoints: d.checkpoints,
            utility_threshold: d.utility_threshold,
            reference_alpha: d.reference_alpha,
            lch_alpha: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub data: DataSection,
    pub synth: SynthSection,
    pub split: SplitSection,
    pub walk: WalkSection,
    pub train: TrainSection,
    pub rating: RatingSection,
    pub recommend: RecommendSection,
    pub hull: HullSection,
    pub eval: EvalSection,
    pub iterate: IterateSection,
}

/// The generator settings minus the seed, which comes from the top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSection {
    pub clusters: usize,
    pub users_per_cluster: usize,
    pub items_per_cluster: usize,
    pub ratings_per_user: usize,
    pub cross_rate: f64,
    pub noise: f64,
    pub popularity_skew: f64,
    pub quality_spread: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let d = SynthConfig::default();
        Self {
            clusters: d.clusters,
            users_per_cluster: d.users_per_cluster,
            items_per_cluster: d.items_per_cluster,
            ratings_per_user: d.ratings_per_user,
            cross_rate: d.cross_rate,
            noise: d.noise,
            popularity_skew: d.popularity_skew,
            quality_spread: d.quality_spread,
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key` inside `[section]` (or the top level when `section` is
/// empty); 0 when the key is not written out.
fn find_key_line(text: &str, section: &str, key: &str) -> usize {
    let mut current = String::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        if let Some((k, _)) = line.split_once('=') {
            if current == section && k.trim() == key {
                return no + 1;
            }
        }
    }
    0
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(0);
            let message = e.message().to_string();
            let key = message
                .split('`')
                .nth(1)
                .filter(|_| message.starts_with("unknown field"))
                .map(str::to_string)
                .or_else(|| {
                    let l = text.lines().nth(line.saturating_sub(1))?;
                    l.split_once('=').map(|(k, _)| k.trim().to_string())
                })
                .unwrap_or_else(|| "?".into());
            Error::Config { key, line, message }
        })?;
        cfg.validate_against(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_against("")
    }

    fn validate_against(&self, text: &str) -> Result<()> {
        let fail = |section: &str, key: &str, message: String| {
            let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
            Err(Error::Config { key: full, line: find_key_line(text, section, key), message })
        };
        if self.data.rating_min >= self.data.rating_max {
            return fail("data", "rating_max", "rating_max must exceed rating_min".into());
        }
        if self.data.min_count < 1 {
            return fail("data", "min_count", "must be >= 1".into());
        }
        if self.data.format != DataFormat::Synth && self.data.reviews.is_none() {
            return fail("data", "reviews", "an input path is required for this format".into());
        }
        if self.split.folds < 2 {
            return fail("split", "folds", "need at least 2 folds".into());
        }
        if self.split.fold >= self.split.folds {
            return fail("split", "fold", format!("fold must be below folds ({})", self.split.folds));
        }
        if let Err(e) = self.synth_config().validate() {
            return fail("synth", "clusters", e.to_string());
        }
        if let Err(e) = self.walk_config().validate() {
            return fail("walk", "walk_length", e.to_string());
        }
        if let Err(e) = self.transition_matrix() {
            return fail("walk.coefficients", "uu", e.to_string());
        }
        if let Err(e) = self.train_config().validate() {
            return fail("train", "dim", e.to_string());
        }
        if self.rating.k < 1 || self.rating.epochs < 1 || !(self.rating.lr > 0.0) || !(self.rating.reg >= 0.0) {
            return fail("rating", "k", "k and epochs must be >= 1, lr > 0, reg >= 0".into());
        }
        if !(self.rating.init_std > 0.0) || !(self.rating.damping >= 0.0) {
            return fail("rating", "init_std", "init_std must be > 0 and damping >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.recommend.alpha) {
            return fail("recommend", "alpha", format!("alpha must lie in [0, 1], got {}", self.recommend.alpha));
        }
        if let Err(e) = self.recommender_config().validate() {
            return fail("recommend", "top_n", e.to_string());
        }
        if !(self.hull.tol > 0.0) || !(self.hull.eps > 0.0) || self.hull.directions < 1 {
            return fail("hull", "tol", "tol and eps must be > 0, directions >= 1".into());
        }
        if self.iterate.checkpoints.is_empty() || self.iterate.checkpoints.contains(&0) {
            return fail("iterate", "checkpoints", "checkpoints must be nonempty and positive".into());
        }
        for (key, a) in [("reference_alpha", Some(self.iterate.reference_alpha)), ("lch_alpha", self.iterate.lch_alpha)] {
            if let Some(a) = a {
                if !(0.0..=1.0).contains(&a) {
                    return fail("iterate", key, format!("must lie in [0, 1], got {a}"));
                }
            }
        }
        Ok(())
    }

    pub fn rating_scale(&self) -> Result<RatingScale> {
        RatingScale::new(self.data.rating_min, self.data.rating_max)
    }

    pub fn filter_mode(&self) -> FilterMode {
        if self.data.single_pass_filter {
            FilterMode::SinglePass
        } else {
            FilterMode::FixedPoint
        }
    }

    pub fn synth_config(&self) -> SynthConfig {
        let s = &self.synth;
        SynthConfig {
            clusters: s.clusters,
            users_per_cluster: s.users_per_cluster,
            items_per_cluster: s.items_per_cluster,
            ratings_per_user: s.ratings_per_user,
            cross_rate: s.cross_rate,
            noise: s.noise,
            popularity_skew: s.popularity_skew,
            quality_spread: s.quality_spread,
            seed: self.seed,
        }
    }

    pub fn walk_config(&self) -> WalkConfig {
        WalkConfig { walks_per_node: self.walk.walks_per_node, walk_length: self.walk.walk_length, seed: self.seed }
    }

    pub fn transition_matrix(&self) -> Result<TransitionMatrix> {
        let c = &self.walk.coefficients;
        TransitionMatrix::new(c.uu, c.ue, c.ui, c.ei, c.ee, c.ii)
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            dim: t.dim,
            window: t.window,
            min_count: t.min_count,
            epochs: t.epochs,
            negatives: t.negatives,
            learning_rate: t.learning_rate,
            min_learning_rate: t.min_learning_rate,
            seed: self.seed,
        }
    }

    pub fn model_kind(&self) -> ModelKind {
        match self.rating.model {
            ModelChoice::BiasedMf => ModelKind::BiasedMf,
            ModelChoice::BiasOnly => ModelKind::BiasOnly,
        }
    }

    pub fn mf_config(&self) -> MfConfig {
        let r = &self.rating;
        MfConfig { k: r.k, epochs: r.epochs, lr: r.lr, reg: r.reg, init_std: r.init_std, seed: self.seed }
    }

    pub fn hull_options(&self) -> HullOptions {
        let h = &self.hull;
        HullOptions { tol: h.tol, max_iter: h.max_iter, eps: h.eps, directions: h.directions }
    }

    pub fn policy(&self) -> ExpectedSetPolicy {
        ExpectedSetPolicy {
            kind: match self.recommend.policy {
                PolicyChoice::Base => PolicyKind::Base,
                PolicyChoice::BaseWithEntities => PolicyKind::BaseWithEntities,
            },
            include_user_vertex: self.recommend.include_user_vertex,
        }
    }

    pub fn recommender_config(&self) -> RecommenderConfig {
        let r = &self.recommend;
        RecommenderConfig {
            alpha: r.alpha,
            top_n: r.top_n,
            normalize_components: r.normalize_components,
            useful_threshold: r.useful_threshold,
            candidate_cap: r.candidate_cap,
            max_hull_vertices: r.max_hull_vertices,
            hull: self.hull_options(),
            seed: self.seed,
        }
    }

    pub fn serendipity_denominator(&self) -> SerendipityDenominator {
        match self.eval.serendipity_denominator {
            DenominatorChoice::Recommended => SerendipityDenominator::Recommended,
            DenominatorChoice::Primitive => SerendipityDenominator::Primitive,
        }
    }

    pub fn iterate_config(&self) -> IterateConfig {
        IterateConfig {
            checkpoints: self.iterate.checkpoints.clone(),
            utility_threshold: self.iterate.utility_threshold,
            reference_alpha: self.iterate.reference_alpha,
            seed: self.seed,
        }
    }

    pub fn lch_alpha(&self) -> f64 {
        self.iterate.lch_alpha.unwrap_or(self.recommend.alpha)
    }
}
