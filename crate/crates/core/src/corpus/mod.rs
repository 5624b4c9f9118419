//! Text corpora for adapter pretraining.
//!
//! Walk corpora chain verbalized triples: the object of one sentence is the
//! subject of the next, so the path
//! `alcoholism -causes-> stigma -hasContext-> christianity` reads
//! "alcoholism causes stigma. stigma is used in the context of christianity."
//! Free-text corpora go through [`LanguageFilter`] instead.

mod filter;
mod stopwords;
mod verbalize;
mod walk;

pub use filter::{filter_non_target_language, LanguageFilter, DEFAULT_THRESHOLD};
pub use stopwords::ENGLISH_STOPWORDS;
pub use verbalize::{verbalize_triple, VerbalizationTable, DEFAULT_TEMPLATES};
pub use walk::{
    generate_corpus, generate_corpus_parallel, random_walk, Provenance, WalkConfig, WalkCorpus,
    WalkStep, DEFAULT_WALK_LENGTH,
};
