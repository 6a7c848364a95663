use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, NaiveDateTime};
use serde_json::Value;

use super::entities::Vocabulary;
use super::records::{read_to_string, valid_key, EntityLink, EntityOrigin, InteractionRecord, LoadStats};
use crate::error::Result;
use crate::rating::RatingScale;

#[derive(Debug, Clone, Default)]
pub struct YelpPaths {
    pub reviews: PathBuf,
    pub businesses: Option<PathBuf>,
    pub users: Option<PathBuf>,
}

pub(crate) fn parse_yelp_date(s: &str) -> Option<i64> {
    if let Ok(dt) = NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S") {
        return Some(dt.and_utc().timestamp());
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|dt| dt.and_utc().timestamp())
}

fn key(v: &Value, field: &str) -> Option<String> {
    v.get(field).and_then(Value::as_str).filter(|k| valid_key(k)).map(str::to_string)
}

/// Comma-separated string or array of strings; "None" means empty.
fn string_list(v: Option<&Value>) -> Vec<String> {
    match v {
        Some(Value::String(s)) if s != "None" => {
            s.split(',').map(str::trim).filter(|t| valid_key(t)).map(str::to_string).collect()
        }
        Some(Value::Array(items)) => items
            .iter()
            .filter_map(Value::as_str)
            .map(str::trim)
            .filter(|t| valid_key(t))
            .map(str::to_string)
            .collect(),
        _ => Vec::new(),
    }
}

/// Runs `parse` over every non-blank line, counting malformed ones.
pub(crate) fn for_each_json_line<F>(path: &Path, mut parse: F) -> Result<LoadStats>
where
    F: FnMut(&Value, &mut LoadStats) -> Option<()>,
{
    let text = read_to_string(path)?;
    let mut stats = LoadStats::default();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        stats.lines += 1;
        let ok = serde_json::from_str::<Value>(line).ok().and_then(|v| parse(&v, &mut stats));
        if ok.is_none() {
            stats.malformed += 1;
        }
    }
    stats.check(path)?;
    Ok(stats)
}

/// Loads Yelp reviews (user_id, business_id, stars, date, text), business
/// categories and user friendships. Review terms are extracted when a
/// vocabulary is given.
pub fn load_yelp(
    paths: &YelpPaths,
    scale: RatingScale,
    vocabulary: Option<&Vocabulary>,
) -> Result<(Vec<InteractionRecord>, Vec<EntityLink>, LoadStats)> {
    let mut records = Vec::new();
    let mut links: BTreeSet<EntityLink> = BTreeSet::new();
    let stats = for_each_json_line(&paths.reviews, |v, stats| {
        let user_key = key(v, "user_id")?;
        let item_key = key(v, "business_id")?;
        let rating = v.get("stars")?.as_f64()?;
        let timestamp = v.get("date").and_then(Value::as_str).and_then(parse_yelp_date);
        let review_text = v.get("text").and_then(Value::as_str).map(str::to_string);
        if !scale.contains(rating) {
            stats.filtered += 1;
            return Some(());
        }
        if let (Some(vocab), Some(text)) = (vocabulary, review_text.as_deref()) {
            for (term, origin) in vocab.matches(text) {
                links.insert(EntityLink { source_key: item_key.clone(), entity_key: term, origin });
            }
        }
        stats.records += 1;
        records.push(InteractionRecord { user_key, item_key, rating, timestamp, review_text });
        Some(())
    })?;
    if let Some(path) = &paths.businesses {
        for_each_json_line(path, |v, stats| {
            let business = key(v, "business_id")?;
            for cat in string_list(v.get("categories")) {
                links.insert(EntityLink {
                    source_key: business.clone(),
                    entity_key: cat.to_lowercase(),
                    origin: EntityOrigin::Category,
                });
            }
            stats.records += 1;
            Some(())
        })?;
    }
    if let Some(path) = &paths.users {
        for_each_json_line(path, |v, stats| {
            let user = key(v, "user_id")?;
            for friend in string_list(v.get("friends")) {
                if friend != user {
                    links.insert(EntityLink { source_key: user.clone(), entity_key: friend, origin: EntityOrigin::Friendship });
                }
            }
            stats.records += 1;
            Some(())
        })?;
    }
    Ok((records, links.into_iter().collect(), stats))
}
