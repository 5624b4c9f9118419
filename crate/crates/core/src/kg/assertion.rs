use std::fmt;

/// One relation triple from the assertion dump.
#[derive(Clone, Debug, PartialEq)]
pub struct Assertion {
    /// Relation URI, e.g. `/r/PartOf`.
    pub relation: String,
    /// Concept URI, e.g. `/c/en/stockholm`.
    pub start: String,
    pub end: String,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SkipReason {
    Language,
    ExcludedRelation,
    Malformed(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum LineOutcome {
    Accepted(Assertion),
    Skipped(SkipReason),
}

impl LineOutcome {
    pub fn assertion(self) -> Option<Assertion> {
        match self {
            LineOutcome::Accepted(a) => Some(a),
            LineOutcome::Skipped(_) => None,
        }
    }
}

/// Relations that never reach the graph unless overridden.
pub const DEFAULT_EXCLUSIONS: &[&str] = &["/r/ExternalURL", "/r/dbpedia/*"];

/// Line parser for the five-column tab-separated ConceptNet dump:
/// assertion URI, relation URI, start URI, end URI, JSON metadata.
#[derive(Clone, Debug)]
pub struct AssertionParser {
    lang: String,
    exclusions: Vec<String>,
}

impl Default for AssertionParser {
    fn default() -> Self {
        Self::new("en")
    }
}

impl AssertionParser {
    pub fn new(lang: &str) -> Self {
        AssertionParser {
            lang: lang.to_string(),
            exclusions: DEFAULT_EXCLUSIONS.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Replaces the exclusion list. A trailing `/*` matches any suffix.
    pub fn with_exclusions<I, T>(mut self, exclusions: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        self.exclusions = exclusions.into_iter().map(Into::into).collect();
        self
    }

    pub fn lang(&self) -> &str {
        &self.lang
    }

    pub fn is_excluded(&self, relation: &str) -> bool {
        self.exclusions.iter().any(|pat| match pat.strip_suffix("/*") {
            Some(prefix) => relation == prefix || relation.starts_with(&format!("{prefix}/")),
            None => relation == pat,
        })
    }

    pub fn parse_line(&self, line: &str) -> LineOutcome {
        let fields: Vec<&str> = line
            .trim_end_matches(['\r', '\n'])
            .split('\t')
            .map(str::trim)
            .collect();
        if fields.len() != 5 {
            return malformed(format_args!("expected 5 fields, found {}", fields.len()));
        }
        let (relation, start, end, meta) = (fields[1], fields[2], fields[3], fields[4]);
        if !relation.starts_with("/r/") {
            return malformed(format_args!("relation {relation:?} lacks /r/ prefix"));
        }
        // ExternalURL targets are web URLs, so exclusion must precede URI checks
        if self.is_excluded(relation) {
            return LineOutcome::Skipped(SkipReason::ExcludedRelation);
        }
        if !start.starts_with("/c/") || !end.starts_with("/c/") {
            return malformed(format_args!("concept URIs must start with /c/"));
        }
        let weight = match serde_json::from_str::<serde_json::Value>(meta) {
            Ok(v) => match v.get("weight").and_then(|w| w.as_f64()) {
                Some(w) if w.is_finite() && w >= 0.0 => w,
                Some(w) => return malformed(format_args!("invalid weight {w}")),
                None => return malformed(format_args!("metadata has no numeric weight")),
            },
            Err(e) => return malformed(format_args!("metadata is not JSON: {e}")),
        };
        if concept_lang(start) != Some(self.lang.as_str())
            || concept_lang(end) != Some(self.lang.as_str())
        {
            return LineOutcome::Skipped(SkipReason::Language);
        }
        if concept_label(start).is_none() || concept_label(end).is_none() {
            return malformed(format_args!("concept URI without a term"));
        }
        LineOutcome::Accepted(Assertion {
            relation: relation.to_string(),
            start: start.to_string(),
            end: end.to_string(),
            weight,
        })
    }
}

fn malformed(msg: fmt::Arguments<'_>) -> LineOutcome {
    LineOutcome::Skipped(SkipReason::Malformed(msg.to_string()))
}

fn concept_lang(uri: &str) -> Option<&str> {
    uri.split('/').nth(2)
}

/// Surface label of a concept URI: `/c/en/ice_cream/n` becomes `ice cream`.
///
/// The part-of-speech and sense suffixes are dropped, the term is
/// lowercased and runs of underscores become single spaces.
pub fn concept_label(uri: &str) -> Option<String> {
    let term = uri.split('/').nth(3)?;
    let label = term
        .to_lowercase()
        .split('_')
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    (!label.is_empty()).then_some(label)
}
