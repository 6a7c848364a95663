use std::collections::HashSet;
use std::path::Path;

use super::records::{read_to_string, EntityOrigin};
use crate::error::{Error, Result};

/// Curated domain terms, each tagged with the origin its links carry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    terms: Vec<(Vec<String>, EntityOrigin)>,
}

fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl Vocabulary {
    pub fn new<S: AsRef<str>>(terms: &[S]) -> Self {
        let mut v = Vocabulary::default();
        for t in terms {
            v.push(t.as_ref(), EntityOrigin::ReviewTerm);
        }
        v
    }

    fn push(&mut self, term: &str, origin: EntityOrigin) {
        let toks = tokens(term);
        if !toks.is_empty() && !self.terms.iter().any(|(t, _)| *t == toks) {
            self.terms.push((toks, origin));
        }
    }

    /// One term per line, optionally followed by a tab and an origin
    /// (`cuisine` or `review_term`). `#` starts a comment.
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        let mut v = Vocabulary::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (term, origin) = match line.split_once('\t') {
                Some((t, o)) => (t.trim(), o.trim().parse().map_err(|e: String| Error::parse(path, no + 1, e))?),
                None => (line, EntityOrigin::ReviewTerm),
            };
            v.push(term, origin);
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Matched terms with their origins, first occurrence order.
    pub fn matches(&self, text: &str) -> Vec<(String, EntityOrigin)> {
        let toks = tokens(text);
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for start in 0..toks.len() {
            for (term, origin) in &self.terms {
                let end = start + term.len();
                if end <= toks.len() && toks[start..end] == term[..] {
                    let key = term.join(" ");
                    if seen.insert(key.clone()) {
                        out.push((key, *origin));
                    }
                }
            }
        }
        out
    }
}

/// Case-insensitive whole-word vocabulary matches, deduplicated, in order of
/// first occurrence.
pub fn extract_entities(review_text: &str, vocabulary: &Vocabulary) -> Vec<String> {
    vocabulary.matches(review_text).into_iter().map(|(k, _)| k).collect()
}
