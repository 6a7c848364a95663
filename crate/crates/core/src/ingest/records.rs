use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::write_file;

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionRecord {
    pub user_key: String,
    pub item_key: String,
    pub rating: f64,
    /// Seconds since the epoch.
    pub timestamp: Option<i64>,
    pub review_text: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityOrigin {
    Category,
    Cuisine,
    /// Friend links; the entity key is another user key.
    Friendship,
    ReviewTerm,
}

impl EntityOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityOrigin::Category => "category",
            EntityOrigin::Cuisine => "cuisine",
            EntityOrigin::Friendship => "friendship",
            EntityOrigin::ReviewTerm => "review_term",
        }
    }
}

impl fmt::Display for EntityOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityOrigin {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "category" => Ok(EntityOrigin::Category),
            "cuisine" => Ok(EntityOrigin::Cuisine),
            "friendship" => Ok(EntityOrigin::Friendship),
            "review_term" => Ok(EntityOrigin::ReviewTerm),
            other => Err(format!("unknown entity origin {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityLink {
    pub source_key: String,
    pub entity_key: String,
    pub origin: EntityOrigin,
}

/// Line accounting for one input file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    /// Non-blank input lines.
    pub lines: usize,
    pub records: usize,
    pub malformed: usize,
    /// Well-formed lines dropped on purpose (rating off the scale).
    pub filtered: usize,
}

impl LoadStats {
    /// Errors out when more than half of the lines were malformed.
    pub(crate) fn check(&self, path: &Path) -> Result<()> {
        if self.lines > 0 && self.malformed * 2 > self.lines {
            return Err(Error::TooManyMalformed { path: path.to_path_buf(), malformed: self.malformed, total: self.lines });
        }
        if self.malformed > 0 {
            log::warn!("{}: skipped {} malformed lines", path.display(), self.malformed);
        }
        if self.lines == 0 {
            log::warn!("{}: no records", path.display());
        }
        Ok(())
    }
}

pub(crate) fn valid_key(k: &str) -> bool {
    !k.is_empty() && !k.contains(['\t', '\n', '\r'])
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// `user \t item \t rating \t timestamp` (timestamp may be empty).
pub fn save_interactions(path: &Path, records: &[InteractionRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        let ts = r.timestamp.map(|t| t.to_string()).unwrap_or_default();
        writeln!(out, "{}\t{}\t{:?}\t{ts}", r.user_key, r.item_key, r.rating).expect("write to String");
    }
    write_file(path, &out)
}

pub fn load_interactions(path: &Path) -> Result<Vec<InteractionRecord>> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 || !valid_key(f[0]) || !valid_key(f[1]) {
            return Err(Error::parse(path, no + 1, "expected user, item, rating, timestamp"));
        }
        let rating: f64 = f[2].parse().map_err(|_| Error::parse(path, no + 1, "bad rating"))?;
        if !rating.is_finite() {
            return Err(Error::parse(path, no + 1, "non-finite rating"));
        }
        let timestamp = if f[3].is_empty() {
            None
        } else {
            Some(f[3].parse().map_err(|_| Error::parse(path, no + 1, "bad timestamp"))?)
        };
        out.push(InteractionRecord {
            user_key: f[0].to_string(),
            item_key: f[1].to_string(),
            rating,
            timestamp,
            review_text: None,
        });
    }
    Ok(out)
}

pub fn save_entity_links(path: &Path, links: &[EntityLink]) -> Result<()> {
    let mut out = String::new();
    for l in links {
        writeln!(out, "{}\t{}\t{}", l.source_key, l.entity_key, l.origin).expect("write to String");
    }
    write_file(path, &out)
}

pub fn load_entity_links(path: &Path) -> Result<Vec<EntityLink>> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 || !valid_key(f[0]) || !valid_key(f[1]) {
            return Err(Error::parse(path, no + 1, "expected source, entity, origin"));
        }
        let origin = f[2].parse().map_err(|e: String| Error::parse(path, no + 1, e))?;
        out.push(EntityLink { source_key: f[0].to_string(), entity_key: f[1].to_string(), origin });
    }
    Ok(out)
}

/// Ground-truth cluster label per user or item key.
pub fn save_labels(path: &Path, labels: &BTreeMap<String, usize>) -> Result<()> {
    let mut out = String::new();
    for (k, c) in labels {
        writeln!(out, "{k}\t{c}").expect("write to String");
    }
    write_file(path, &out)
}

pub fn load_labels(path: &Path) -> Result<BTreeMap<String, usize>> {
    let text = read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (k, c) = line.split_once('\t').ok_or_else(|| Error::parse(path, no + 1, "expected key, cluster"))?;
        let c = c.parse().map_err(|_| Error::parse(path, no + 1, "bad cluster label"))?;
        out.insert(k.to_string(), c);
    }
    Ok(out)
}
