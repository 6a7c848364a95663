//! Dataset ingestion, entity extraction, sparsity filtering and the
//! planted-cluster generator.

mod entities;
mod filter;
mod records;
mod synth;
mod tripadvisor;
mod yelp;

pub use entities::{extract_entities, Vocabulary as TermVocabulary};
pub use filter::{filter_sparse, FilterMode, FilterStats};
pub use records::{
    load_entity_links, load_interactions, load_labels, save_entity_links, save_interactions, save_labels,
    EntityLink, EntityOrigin, InteractionRecord, LoadStats,
};
pub use synth::{synth_dataset, SynthConfig, SynthData};
pub use tripadvisor::load_tripadvisor;
pub use yelp::{load_yelp, YelpPaths};
