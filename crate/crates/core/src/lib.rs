//! Knowledge injection into a frozen transformer encoder through bottleneck
//! adapters.
//!
//! The pipeline, bottom to top:
//!
//! - [`kg`] parses a ConceptNet-style assertion dump into a directed multigraph.
//! - [`corpus`] turns uniform random walks over that graph into sentences and
//!   filters free-text corpora down to English.
//! - [`tokenizer`] builds a wordpiece vocabulary and frames token sequences.
//! - [`autodiff`] is the dense-tensor core with reverse-mode gradients.
//! - [`model`] is the encoder with two adapters per layer and task heads.
//! - [`train`] holds masking, the optimizer, and the adapter pretraining and
//!   fine-tuning loops.
//! - [`eval`] computes MCC, accuracy, F1 and Spearman, overall and per
//!   diagnostic category, and renders comparison tables.

pub mod autodiff;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod kg;
pub mod model;
pub mod rng;
pub mod tokenizer;
pub mod train;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/knowledge-graph.md")]
    mod knowledge_graph {}
    #[doc = include_str!("../../../book/src/tokenizer.md")]
    mod tokenizer {}
    #[doc = include_str!("../../../book/src/adapters.md")]
    mod adapters {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
