use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::verbalize::{verbalize_triple, VerbalizationTable};
use crate::error::{Error, Result};
use crate::kg::{cache::graph_digest, KnowledgeGraph};
use crate::rng::indexed_rng;

/// Length of each walk in relations.
pub const DEFAULT_WALK_LENGTH: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkConfig {
    walk_length: usize,
    num_walks: usize,
    seed: u64,
}

impl WalkConfig {
    pub fn new(walk_length: usize, num_walks: usize, seed: u64) -> Result<Self> {
        if walk_length == 0 {
            return Err(Error::Config("walk length must be at least 1".into()));
        }
        if num_walks == 0 {
            return Err(Error::Config("number of walks must be at least 1".into()));
        }
        Ok(WalkConfig {
            walk_length,
            num_walks,
            seed,
        })
    }

    pub fn walk_length(&self) -> usize {
        self.walk_length
    }

    pub fn num_walks(&self) -> usize {
        self.num_walks
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WalkStep {
    pub subject: usize,
    pub relation: u32,
    pub object: usize,
}

/// Follows uniformly chosen outgoing edges from `start` for at most `len`
/// steps, stopping early at a sink. Each step's object is the next subject.
pub fn random_walk<R: Rng + ?Sized>(
    g: &KnowledgeGraph,
    start: usize,
    len: usize,
    rng: &mut R,
) -> Vec<WalkStep> {
    assert!(start < g.node_count(), "start node {start} out of range");
    let mut steps = Vec::with_capacity(len.min(64));
    let mut current = start;
    while steps.len() < len {
        let edges = g.out_edges(current);
        if edges.is_empty() {
            break;
        }
        let e = edges[rng.random_range(0..edges.len())];
        steps.push(WalkStep {
            subject: current,
            relation: e.relation,
            object: e.target as usize,
        });
        current = e.target as usize;
    }
    steps
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub walk_length: usize,
    pub num_walks: usize,
    /// Hex SHA-256 of the graph's cache encoding.
    pub graph_hash: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkCorpus {
    pub sentences: Vec<String>,
    /// Sentence count contributed by each walk, in walk order.
    pub walk_sizes: Vec<usize>,
    pub provenance: Provenance,
    pub warnings: Vec<String>,
}

impl WalkCorpus {
    /// One sentence per line, LF-terminated.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        for s in &self.sentences {
            w.write_all(s.as_bytes())?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.sentences {
            out.push_str(s);
            out.push('\n');
        }
        out
    }
}

fn walk_sentences(
    g: &KnowledgeGraph,
    cfg: &WalkConfig,
    table: &VerbalizationTable,
    walk: usize,
) -> Result<Vec<String>> {
    let mut rng = indexed_rng(cfg.seed, walk as u64);
    let start = rng.random_range(0..g.node_count());
    random_walk(g, start, cfg.walk_length, &mut rng)
        .iter()
        .map(|s| {
            verbalize_triple(
                g.label(s.subject),
                g.relation(s.relation),
                g.label(s.object),
                table,
            )
        })
        .collect()
}

fn assemble(
    g: &KnowledgeGraph,
    cfg: &WalkConfig,
    per_walk: Vec<Vec<String>>,
    warnings: Vec<String>,
) -> WalkCorpus {
    let walk_sizes = per_walk.iter().map(Vec::len).collect();
    WalkCorpus {
        sentences: per_walk.into_iter().flatten().collect(),
        walk_sizes,
        provenance: Provenance {
            seed: cfg.seed,
            walk_length: cfg.walk_length,
            num_walks: cfg.num_walks,
            graph_hash: graph_digest(g),
        },
        warnings,
    }
}

fn precheck(g: &KnowledgeGraph, cfg: &WalkConfig, table: &VerbalizationTable) -> Result<Option<WalkCorpus>> {
    table.check_coverage(g)?;
    if g.edge_count() == 0 {
        let warning = "graph has no edges; corpus is empty".to_string();
        return Ok(Some(assemble(g, cfg, Vec::new(), vec![warning])));
    }
    Ok(None)
}

/// Runs `num_walks` walks. Walk `w` draws its start node and every step from
/// a generator seeded by `derive_seed(seed, w)`; a walk starting at a sink
/// contributes nothing.
pub fn generate_corpus(
    g: &KnowledgeGraph,
    cfg: &WalkConfig,
    table: &VerbalizationTable,
) -> Result<WalkCorpus> {
    if let Some(empty) = precheck(g, cfg, table)? {
        return Ok(empty);
    }
    let per_walk = (0..cfg.num_walks)
        .map(|w| walk_sentences(g, cfg, table, w))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(g, cfg, per_walk, Vec::new()))
}

/// Same output as [`generate_corpus`], with walks split across `threads`.
pub fn generate_corpus_parallel(
    g: &KnowledgeGraph,
    cfg: &WalkConfig,
    table: &VerbalizationTable,
    threads: usize,
) -> Result<WalkCorpus> {
    if let Some(empty) = precheck(g, cfg, table)? {
        return Ok(empty);
    }
    let threads = threads.clamp(1, cfg.num_walks);
    let chunk = cfg.num_walks.div_ceil(threads);
    let parts: Vec<Result<Vec<Vec<String>>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let range = (t * chunk)..((t + 1) * chunk).min(cfg.num_walks);
                scope.spawn(move || {
                    range
                        .map(|w| walk_sentences(g, cfg, table, w))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("walk worker")).collect()
    });
    let mut per_walk = Vec::with_capacity(cfg.num_walks);
    for p in parts {
        per_walk.extend(p?);
    }
    Ok(assemble(g, cfg, per_walk, Vec::new()))
}
