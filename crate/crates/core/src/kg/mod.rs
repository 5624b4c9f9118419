//! ConceptNet assertion ingestion.
//!
//! [`ingest`] streams a tab-separated dump through an [`AssertionParser`]
//! and collects the accepted triples into a [`KnowledgeGraph`]. Bad lines are
//! counted, never fatal.

mod assertion;
pub mod cache;
mod graph;
pub mod toy;

use std::io::BufRead;

pub use assertion::{
    concept_label, Assertion, AssertionParser, LineOutcome, SkipReason, DEFAULT_EXCLUSIONS,
};
pub use graph::{build_graph, graph_stats, Edge, GraphBuilder, GraphStats, KnowledgeGraph, Triple};

use crate::error::Result;

/// Per-outcome line counts from one ingestion run.
#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct IngestCounts {
    pub lines: usize,
    pub accepted: usize,
    pub wrong_language: usize,
    pub excluded: usize,
    /// Lines rejected as malformed; each one is a warning.
    pub malformed: usize,
}

impl IngestCounts {
    pub fn record(&mut self, outcome: &LineOutcome) {
        self.lines += 1;
        match outcome {
            LineOutcome::Accepted(_) => self.accepted += 1,
            LineOutcome::Skipped(SkipReason::Language) => self.wrong_language += 1,
            LineOutcome::Skipped(SkipReason::ExcludedRelation) => self.excluded += 1,
            LineOutcome::Skipped(SkipReason::Malformed(_)) => self.malformed += 1,
        }
    }
}

/// Parses every line of `reader` and builds the graph.
pub fn ingest<R: BufRead>(reader: R, parser: &AssertionParser) -> Result<(KnowledgeGraph, IngestCounts)> {
    let mut counts = IngestCounts::default();
    let mut builder = GraphBuilder::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let outcome = parser.parse_line(&line);
        counts.record(&outcome);
        if let LineOutcome::Accepted(a) = outcome {
            builder.add_assertion(&a);
        }
    }
    Ok((builder.build(), counts))
}

/// Parses independent shards of lines and merges them; the result equals
/// sequential ingestion of the concatenated shards.
pub fn ingest_shards(shards: &[Vec<String>], parser: &AssertionParser) -> (KnowledgeGraph, IngestCounts) {
    let partials: Vec<(GraphBuilder, IngestCounts)> = std::thread::scope(|scope| {
        let handles: Vec<_> = shards
            .iter()
            .map(|lines| {
                scope.spawn(move || {
                    let mut counts = IngestCounts::default();
                    let mut b = GraphBuilder::new();
                    for line in lines.iter().filter(|l| !l.trim().is_empty()) {
                        let outcome = parser.parse_line(line);
                        counts.record(&outcome);
                        if let LineOutcome::Accepted(a) = outcome {
                            b.add_assertion(&a);
                        }
                    }
                    (b, counts)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("ingest shard")).collect()
    });
    let mut builder = GraphBuilder::new();
    let mut counts = IngestCounts::default();
    for (b, c) in partials {
        builder.merge(b);
        counts.lines += c.lines;
        counts.accepted += c.accepted;
        counts.wrong_language += c.wrong_language;
        counts.excluded += c.excluded;
        counts.malformed += c.malformed;
    }
    (builder.build(), counts)
}
