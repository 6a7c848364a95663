mod common;

use std::collections::HashMap;

use common::criteria::{endpoint_mismatches, prepare_sample, prepare_synthetic};
use hullrec_core::config::DataFormat;
use hullrec_core::ingest::synth_dataset;
use hullrec_core::pipeline::raw_key;
use hullrec_core::NodeId;

#[test]
fn unexpectedness_weight_moves_lists_out_of_cluster() {
    let cfg = common::synthetic_config();
    let data = synth_dataset(&cfg.synth_config()).unwrap();
    let prep = prepare_synthetic(&cfg);
    let label: HashMap<NodeId, usize> = prep
        .graph
        .node_ids()
        .filter_map(|id| data.labels.get(raw_key(prep.graph.key(id).unwrap())).map(|c| (id, *c)))
        .collect();
    let share = |alpha: f64| {
        let rec = prep.recommender(&cfg).unwrap().with_alpha(alpha).unwrap();
        let lists = rec.recommend_all(&rec.users()).unwrap();
        let (mut out, mut total) = (0, 0);
        for l in &lists {
            for s in &l.items {
                total += 1;
                if label[&s.item] != label[&l.user] {
                    out += 1;
                }
            }
        }
        out as f64 / total as f64
    };
    let (low, high) = (share(0.0), share(0.8));
    assert!(low < 0.05, "alpha 0 out-of-cluster share {low}");
    assert!(high >= 0.30, "alpha 0.8 out-of-cluster share {high}");
}

#[test]
fn rating_only_endpoint_on_samples() {
    for format in [DataFormat::Yelp, DataFormat::Tripadvisor] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = common::sample_config(format);
        let prep = prepare_sample(&cfg, dir.path());
        let (users, bad) = endpoint_mismatches(&prep, &cfg);
        assert!(users > 0);
        assert_eq!(bad, 0, "{format:?}");
    }
}

#[test]
fn coverage_experiment_orders_policies() {
    let outcome = common::criteria::hull_coverage_ordering();
    assert!(outcome.pass, "{}", outcome.detail);
}
