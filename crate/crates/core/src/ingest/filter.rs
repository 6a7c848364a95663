use std::collections::HashMap;

use super::records::InteractionRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterMode {
    /// Repeat until every survivor meets the threshold.
    #[default]
    FixedPoint,
    /// One pass over the original counts.
    SinglePass,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FilterStats {
    pub rounds: usize,
    pub removed: usize,
}

fn counts(records: &[InteractionRecord]) -> (HashMap<&str, usize>, HashMap<&str, usize>) {
    let mut users: HashMap<&str, usize> = HashMap::new();
    let mut items: HashMap<&str, usize> = HashMap::new();
    for r in records {
        *users.entry(&r.user_key).or_default() += 1;
        *items.entry(&r.item_key).or_default() += 1;
    }
    (users, items)
}

/// Drops users and items with fewer than `min_count` interactions. Input
/// order is preserved.
pub fn filter_sparse(records: &[InteractionRecord], min_count: usize, mode: FilterMode) -> (Vec<InteractionRecord>, FilterStats) {
    let mut kept: Vec<InteractionRecord> = records.to_vec();
    let mut stats = FilterStats::default();
    loop {
        let (users, items) = counts(&kept);
        let keep: Vec<bool> = kept
            .iter()
            .map(|r| users[r.user_key.as_str()] >= min_count && items[r.item_key.as_str()] >= min_count)
            .collect();
        let before = kept.len();
        let mut flags = keep.into_iter();
        kept.retain(|_| flags.next().unwrap_or(false));
        stats.rounds += 1;
        if kept.len() == before || mode == FilterMode::SinglePass {
            break;
        }
    }
    stats.removed = records.len() - kept.len();
    if kept.is_empty() && !records.is_empty() {
        log::warn!("sparsity filter (min_count {min_count}) removed every record");
    }
    (kept, stats)
}
