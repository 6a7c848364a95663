//! Unexpectedness-aware recommendation over a heterogeneous information
//! network.
//!
//! The pipeline embeds users, items and entities with type-guided random
//! walks and skip-gram training, models each user's expectations as the
//! convex hull of their consumed items in embedding space, and ranks unseen
//! items by a blend of predicted rating and signed distance to that hull.

pub mod config;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod graph;
pub mod hull;
pub mod ingest;
pub mod pipeline;
pub mod rating;
pub mod recommend;
pub mod walk;

pub use config::PipelineConfig;
pub use embedding::{EmbeddingTable, TrainConfig};
pub use error::{Error, Result};
pub use eval::{MaxHullExperiment, MetricsReport};
pub use graph::{HinGraph, NodeId, NodeType};
pub use hull::{HullOptions, HullProjection, HullVertices, SignedDistance};
pub use ingest::{EntityLink, EntityOrigin, InteractionRecord};
pub use pipeline::{Pipeline, Prepared};
pub use rating::{Rating, RatingModel, RatingScale, TrainTestSplit};
pub use recommend::{ExpectedSetPolicy, RecommendationList, Recommender, RecommenderConfig, ScoredItem};
pub use walk::{TransitionMatrix, WalkConfig, WalkCorpus};
