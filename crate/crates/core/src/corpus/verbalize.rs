use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::kg::KnowledgeGraph;

/// Phrases for the core ConceptNet 5 relations.
pub const DEFAULT_TEMPLATES: &[(&str, &str)] = &[
    ("/r/Antonym", "is the opposite of"),
    ("/r/AtLocation", "is at"),
    ("/r/CapableOf", "is capable of"),
    ("/r/Causes", "causes"),
    ("/r/CausesDesire", "makes you want"),
    ("/r/CreatedBy", "is created by"),
    ("/r/DefinedAs", "is defined as"),
    ("/r/DerivedFrom", "is derived from"),
    ("/r/Desires", "desires"),
    ("/r/DistinctFrom", "is distinct from"),
    ("/r/Entails", "entails"),
    ("/r/EtymologicallyDerivedFrom", "is etymologically derived from"),
    ("/r/EtymologicallyRelatedTo", "is etymologically related to"),
    ("/r/FormOf", "is a form of"),
    ("/r/HasA", "has a"),
    ("/r/HasContext", "is used in the context of"),
    ("/r/HasFirstSubevent", "begins with"),
    ("/r/HasLastSubevent", "ends with"),
    ("/r/HasPrerequisite", "requires"),
    ("/r/HasProperty", "has the property"),
    ("/r/HasSubevent", "has the subevent"),
    ("/r/InstanceOf", "is an instance of"),
    ("/r/IsA", "is a"),
    ("/r/LocatedNear", "is located near"),
    ("/r/MadeOf", "is made of"),
    ("/r/MannerOf", "is a way of"),
    ("/r/MotivatedByGoal", "is motivated by"),
    ("/r/NotCapableOf", "is not capable of"),
    ("/r/NotDesires", "does not desire"),
    ("/r/NotHasProperty", "does not have the property"),
    ("/r/NotUsedFor", "is not used for"),
    ("/r/ObstructedBy", "is obstructed by"),
    ("/r/PartOf", "is part of"),
    ("/r/ReceivesAction", "can be"),
    ("/r/RelatedTo", "is related to"),
    ("/r/SimilarTo", "is similar to"),
    ("/r/SymbolOf", "is a symbol of"),
    ("/r/Synonym", "is a synonym of"),
    ("/r/UsedFor", "is used for"),
];

/// Relation URI → infix phrase, rendering `"{subject} {phrase} {object}."`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerbalizationTable {
    phrases: BTreeMap<String, String>,
}

impl Default for VerbalizationTable {
    fn default() -> Self {
        let phrases = DEFAULT_TEMPLATES
            .iter()
            .map(|&(r, p)| (r.to_string(), p.to_string()))
            .collect();
        VerbalizationTable { phrases }
    }
}

impl VerbalizationTable {
    pub fn empty() -> Self {
        VerbalizationTable {
            phrases: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, relation: &str, phrase: &str) -> Result<()> {
        let phrase = phrase.trim();
        if phrase.is_empty() || phrase.contains(['\t', '\n', '\r']) {
            return Err(Error::Config(format!(
                "template for {relation} must be a non-empty single-line phrase"
            )));
        }
        if phrase != phrase.to_lowercase() {
            return Err(Error::Config(format!("template for {relation} must be lowercase")));
        }
        self.phrases.insert(relation.to_string(), phrase.to_string());
        Ok(())
    }

    /// Applies overrides from `relation<TAB>phrase` lines. Blank lines and
    /// lines starting with `#` are ignored.
    pub fn apply_overrides(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (rel, phrase) = line.split_once('\t').ok_or_else(|| {
                Error::Config(format!("template line {}: expected relation<TAB>phrase", n + 1))
            })?;
            self.insert(rel.trim(), phrase)?;
        }
        Ok(())
    }

    pub fn phrase(&self, relation: &str) -> Option<&str> {
        self.phrases.get(relation).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    /// Fails with the first graph relation that has no phrase.
    pub fn check_coverage(&self, g: &KnowledgeGraph) -> Result<()> {
        match g.relations().iter().find(|r| !self.phrases.contains_key(*r)) {
            Some(r) => Err(Error::MissingTemplate(r.clone())),
            None => Ok(()),
        }
    }
}

/// Renders one triple as a sentence.
pub fn verbalize_triple(
    subject: &str,
    relation: &str,
    object: &str,
    table: &VerbalizationTable,
) -> Result<String> {
    let phrase = table
        .phrase(relation)
        .ok_or_else(|| Error::MissingTemplate(relation.to_string()))?;
    Ok(format!("{subject} {phrase} {object}.").to_lowercase())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_phrases() {
        let t = VerbalizationTable::default();
        assert_eq!(
            verbalize_triple("stigma", "/r/HasContext", "christianity", &t).unwrap(),
            "stigma is used in the context of christianity."
        );
        assert_eq!(
            verbalize_triple("christianity", "/r/PartOf", "religion", &t).unwrap(),
            "christianity is part of religion."
        );
        assert_eq!(
            verbalize_triple("alcoholism", "/r/Causes", "stigma", &t).unwrap(),
            "alcoholism causes stigma."
        );
    }

    #[test]
    fn default_table_is_well_formed() {
        let t = VerbalizationTable::default();
        assert_eq!(t.len(), DEFAULT_TEMPLATES.len());
        for (r, p) in DEFAULT_TEMPLATES {
            assert!(r.starts_with("/r/"));
            assert_eq!(*p, p.to_lowercase());
            assert!(!p.contains(['\t', '\n']));
        }
    }

    #[test]
    fn unknown_relation_is_an_error() {
        let t = VerbalizationTable::default();
        let err = verbalize_triple("a", "/r/Unheard", "b", &t).unwrap_err();
        assert!(matches!(err, Error::MissingTemplate(r) if r == "/r/Unheard"));
    }

    #[test]
    fn overrides_replace_and_extend() {
        let mut t = VerbalizationTable::default();
        t.apply_overrides("# custom\n/r/IsA\tis a kind of\n/r/Knows\tknows\n").unwrap();
        assert_eq!(t.phrase("/r/IsA"), Some("is a kind of"));
        assert_eq!(t.phrase("/r/Knows"), Some("knows"));
        assert!(t.apply_overrides("/r/Bad\tIs Upper\n").is_err());
        assert!(t.apply_overrides("/r/NoTab is\n").is_err());
    }
}
