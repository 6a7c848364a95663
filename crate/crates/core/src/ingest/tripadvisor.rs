use std::collections::BTreeSet;
use std::path::Path;

use chrono::NaiveDate;
use serde_json::Value;

use super::entities::Vocabulary;
use super::records::{valid_key, EntityLink, InteractionRecord, LoadStats};
use super::yelp::for_each_json_line;
use crate::error::Result;
use crate::rating::RatingScale;

fn parse_date(s: &str) -> Option<i64> {
    NaiveDate::parse_from_str(s.trim(), "%B %d, %Y")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|dt| dt.and_utc().timestamp())
}

/// Ids show up both as strings and as numbers.
fn id(v: Option<&Value>) -> Option<String> {
    match v? {
        Value::String(s) if valid_key(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// Loads TripAdvisor reviews (author.id, offering_id, ratings.overall, text,
/// date). Entities come only from review terms.
pub fn load_tripadvisor(
    path: &Path,
    scale: RatingScale,
    vocabulary: Option<&Vocabulary>,
) -> Result<(Vec<InteractionRecord>, Vec<EntityLink>, LoadStats)> {
    let mut records = Vec::new();
    let mut links: BTreeSet<EntityLink> = BTreeSet::new();
    let stats = for_each_json_line(path, |v, stats| {
        let user_key = id(v.get("author")?.get("id"))?;
        let item_key = id(v.get("offering_id"))?;
        let rating = v.get("ratings")?.get("overall")?.as_f64()?;
        let timestamp = v.get("date").and_then(Value::as_str).and_then(parse_date);
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
    Ok((records, links.into_iter().collect(), stats))
}
