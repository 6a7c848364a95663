use std::collections::{BTreeMap, BTreeSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::records::{EntityLink, EntityOrigin, InteractionRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub clusters: usize,
    pub users_per_cluster: usize,
    pub items_per_cluster: usize,
    pub ratings_per_user: usize,
    /// Probability that one of a user's ratings goes to another cluster.
    pub cross_rate: f64,
    /// Ratings are `5 - quality_gap - noise·u` in-cluster and `1 + noise·u`
    /// across clusters, `u ~ U[0, 1)`.
    pub noise: f64,
    /// Zipf exponent of item popularity inside a cluster (0 = uniform).
    pub popularity_skew: f64,
    /// In-cluster rating penalty of the least popular item; it falls
    /// linearly with popularity rank, so the head is also rated best.
    pub quality_spread: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            clusters: 4,
            users_per_cluster: 50,
            items_per_cluster: 30,
            ratings_per_user: 15,
            cross_rate: 0.05,
            noise: 1.0,
            popularity_skew: 1.0,
            quality_spread: 1.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.clusters < 2 {
            return Err(Error::InvalidParameter("synth needs at least 2 clusters".into()));
        }
        if self.users_per_cluster == 0 || self.items_per_cluster == 0 || self.ratings_per_user == 0 {
            return Err(Error::InvalidParameter("synth sizes must be positive".into()));
        }
        if self.ratings_per_user > self.items_per_cluster {
            return Err(Error::InvalidParameter("ratings_per_user exceeds items_per_cluster".into()));
        }
        if !(0.0..=1.0).contains(&self.cross_rate) || !(0.0..=4.0).contains(&self.noise) {
            return Err(Error::InvalidParameter("cross_rate must lie in [0, 1] and noise in [0, 4]".into()));
        }
        if !(self.popularity_skew >= 0.0) || !(0.0..=4.0).contains(&self.quality_spread) || self.noise + self.quality_spread > 4.0 {
            return Err(Error::InvalidParameter(
                "popularity_skew must be >= 0 and noise + quality_spread at most 4".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub records: Vec<InteractionRecord>,
    pub links: Vec<EntityLink>,
    /// Home cluster of every user and item key.
    pub labels: BTreeMap<String, usize>,
}

pub fn user_key(cluster: usize, j: usize) -> String {
    format!("c{cluster}_u{j:03}")
}

pub fn item_key(cluster: usize, j: usize) -> String {
    format!("c{cluster}_i{j:03}")
}

/// Planted-cluster ratings: users mostly rate items of their own cluster
/// high and occasionally rate other clusters' items low. Item `j` of every
/// cluster is the `j`-th most popular and best rated. One entity per
/// cluster is linked to that cluster's items.
pub fn synth_dataset(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut labels = BTreeMap::new();
    let mut links = Vec::new();
    for c in 0..cfg.clusters {
        for j in 0..cfg.items_per_cluster {
            labels.insert(item_key(c, j), c);
            links.push(EntityLink { source_key: item_key(c, j), entity_key: format!("topic{c}"), origin: EntityOrigin::Category });
        }
    }
    let weights: Vec<f64> = (0..cfg.items_per_cluster).map(|j| ((j + 1) as f64).powf(-cfg.popularity_skew)).collect();
    let pick = WeightedIndex::new(&weights).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let rank_span = (cfg.items_per_cluster.max(2) - 1) as f64;
    let mut records = Vec::new();
    let mut clock: i64 = 1_500_000_000;
    for c in 0..cfg.clusters {
        for j in 0..cfg.users_per_cluster {
            let user = user_key(c, j);
            labels.insert(user.clone(), c);
            let mut rated: BTreeSet<(usize, usize)> = BTreeSet::new();
            while rated.len() < cfg.ratings_per_user {
                let cross = rng.random_bool(cfg.cross_rate);
                let cluster = if cross {
                    let other = rng.random_range(0..cfg.clusters - 1);
                    if other >= c { other + 1 } else { other }
                } else {
                    c
                };
                let item = pick.sample(&mut rng);
                if !rated.insert((cluster, item)) {
                    continue;
                }
                let u: f64 = rng.random();
                let rating = if cluster == c {
                    5.0 - cfg.quality_spread * item as f64 / rank_span - cfg.noise * u
                } else {
                    1.0 + cfg.noise * u
                };
                clock += 60;
                records.push(InteractionRecord {
                    user_key: user.clone(),
                    item_key: item_key(cluster, item),
                    rating,
                    timestamp: Some(clock),
                    review_text: None,
                });
            }
        }
    }
    Ok(SynthData { records, links, labels })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_cross_cluster_when_rate_is_zero() {
        let cfg = SynthConfig { cross_rate: 0.0, ..SynthConfig::default() };
        let data = synth_dataset(&cfg).unwrap();
        for r in &data.records {
            assert_eq!(data.labels[&r.user_key], data.labels[&r.item_key]);
            assert!(r.rating > 2.9);
        }
        assert_eq!(data.records.len(), 4 * 50 * cfg.ratings_per_user);
    }

    #[test]
    fn deterministic_and_validated() {
        let cfg = SynthConfig { seed: 9, ..SynthConfig::default() };
        assert_eq!(synth_dataset(&cfg).unwrap(), synth_dataset(&cfg).unwrap());
        assert_ne!(synth_dataset(&cfg).unwrap(), synth_dataset(&SynthConfig::default()).unwrap());
        assert!(synth_dataset(&SynthConfig { clusters: 1, ..cfg }).is_err());
    }
}
