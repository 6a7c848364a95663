#![allow(dead_code)]

pub mod criteria;
pub mod oracles;

use std::path::PathBuf;

use hullrec_core::config::DataFormat;
use hullrec_core::PipelineConfig;

pub const SYNTHETIC_TOML: &str = include_str!("../../../../configs/synthetic.toml");

pub fn synthetic_config() -> PipelineConfig {
    PipelineConfig::from_toml_str(SYNTHETIC_TOML).expect("synthetic config parses")
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

/// Small-sample settings for the bundled Yelp and TripAdvisor files.
pub fn sample_config(format: DataFormat) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.seed = 3;
    cfg.data.format = format;
    cfg.data.vocabulary = Some(fixture("vocabulary.txt"));
    match format {
        DataFormat::Yelp => {
            cfg.data.reviews = Some(fixture("yelp_review.json"));
            cfg.data.businesses = Some(fixture("yelp_business.json"));
            cfg.data.users = Some(fixture("yelp_user.json"));
        }
        DataFormat::Tripadvisor => cfg.data.reviews = Some(fixture("tripadvisor.json")),
        _ => {}
    }
    cfg.walk.walks_per_node = 5;
    cfg.walk.walk_length = 40;
    cfg.train.dim = 8;
    cfg.train.epochs = 3;
    cfg.rating.k = 4;
    cfg.rating.epochs = 30;
    cfg.split.folds = 4;
    cfg
}
