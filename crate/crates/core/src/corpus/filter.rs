use std::collections::HashSet;
use std::sync::OnceLock;

use super::stopwords::ENGLISH_STOPWORDS;
use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.10;

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| ENGLISH_STOPWORDS.iter().copied().collect())
}

/// Stopword-ratio heuristic for keeping English lines of a free-text corpus.
#[derive(Clone, Copy, Debug)]
pub struct LanguageFilter {
    threshold: f64,
}

impl Default for LanguageFilter {
    fn default() -> Self {
        LanguageFilter {
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl LanguageFilter {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::Config(format!("threshold {threshold} outside [0, 1]")));
        }
        Ok(LanguageFilter { threshold })
    }

    /// Fraction of whitespace tokens that are stopwords, after lowercasing
    /// and trimming surrounding punctuation. `None` for an empty line.
    pub fn stopword_ratio(line: &str) -> Option<f64> {
        let lower = line.to_lowercase();
        let tokens: Vec<&str> = lower.split_whitespace().collect();
        if tokens.is_empty() {
            return None;
        }
        let hits = tokens
            .iter()
            .filter(|t| stopwords().contains(t.trim_matches(|c: char| c.is_ascii_punctuation() && c != '\'')))
            .count();
        Some(hits as f64 / tokens.len() as f64)
    }

    /// Returns the lowercased, trimmed line if it passes.
    pub fn keep(&self, line: &str) -> Option<String> {
        let trimmed = line.trim();
        let ratio = Self::stopword_ratio(trimmed)?;
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        let short_ascii = tokens.len() < 4
            && tokens
                .iter()
                .all(|t| t.chars().all(|c| c.is_ascii_alphabetic()));
        (ratio >= self.threshold || short_ascii).then(|| trimmed.to_lowercase())
    }
}

/// Streams `lines`, keeping those judged English.
pub fn filter_non_target_language<'a, I>(lines: I, threshold: f64) -> Result<impl Iterator<Item = String> + 'a>
where
    I: IntoIterator + 'a,
    I::Item: AsRef<str>,
{
    let f = LanguageFilter::new(threshold)?;
    Ok(lines.into_iter().filter_map(move |l| f.keep(l.as_ref())))
}
