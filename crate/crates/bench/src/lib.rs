//! Inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hullrec_core::ingest::{synth_dataset, SynthConfig};
use hullrec_core::pipeline::build_graph;
use hullrec_core::{HinGraph, HullVertices};

/// `count` random vertices in `[-1, 1]^dim` and a query outside them.
pub fn hull_instance(dim: usize, count: usize, seed: u64) -> (HullVertices, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..count).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let query = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
    (HullVertices::new(&points).expect("nonempty"), query)
}

/// Train graph of a planted-cluster dataset.
pub fn synthetic_graph(users_per_cluster: usize) -> HinGraph {
    let cfg = SynthConfig { users_per_cluster, seed: 1, ..SynthConfig::default() };
    let data = synth_dataset(&cfg).expect("synth");
    build_graph(&data.records, &data.links).expect("graph")
}
