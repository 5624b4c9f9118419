//! Small synthetic graphs with made-up vocabulary, for demos and tests.

use rand::seq::SliceRandom;
use rand::Rng;

use super::graph::{GraphBuilder, KnowledgeGraph};
use crate::rng::indexed_rng;

const ONSETS: [&str; 14] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

/// Relations used by [`random_graph`]; all have default templates.
pub const TOY_RELATIONS: [&str; 6] = [
    "/r/IsA",
    "/r/PartOf",
    "/r/AtLocation",
    "/r/UsedFor",
    "/r/CapableOf",
    "/r/Causes",
];

/// `n` distinct three-syllable words such as "kavemo".
pub fn toy_words(n: usize, seed: u64) -> Vec<String> {
    let mut rng = indexed_rng(seed, 0);
    let mut out: Vec<String> = Vec::with_capacity(n);
    while out.len() < n {
        let w: String = (0..3)
            .map(|_| {
                format!(
                    "{}{}",
                    ONSETS[rng.random_range(0..ONSETS.len())],
                    VOWELS[rng.random_range(0..VOWELS.len())]
                )
            })
            .collect();
        if !out.contains(&w) {
            out.push(w);
        }
    }
    out
}

/// `nodes` words, each with `out_degree` edges to distinct other nodes
/// under random relations.
pub fn random_graph(nodes: usize, out_degree: usize, seed: u64) -> KnowledgeGraph {
    let words = toy_words(nodes, seed);
    let mut rng = indexed_rng(seed, 1);
    let mut b = GraphBuilder::new();
    for (i, w) in words.iter().enumerate() {
        let mut others: Vec<usize> = (0..nodes).filter(|&j| j != i).collect();
        others.shuffle(&mut rng);
        for &j in others.iter().take(out_degree) {
            let rel = TOY_RELATIONS[rng.random_range(0..TOY_RELATIONS.len())];
            b.add_labeled(w, rel, &words[j], 1.0);
        }
    }
    b.build()
}

/// Membership facts: every member is `PartOf` exactly one group, with groups
/// filled round-robin after a shuffle. Returns the graph and the
/// `(member, group)` pairs in member order.
pub fn part_of_graph(members: usize, groups: usize, seed: u64) -> (KnowledgeGraph, Vec<(String, String)>) {
    assert!(groups > 0, "need at least one group");
    let words = toy_words(members + groups, seed);
    let (m, g) = words.split_at(members);
    let mut slots: Vec<usize> = (0..members).map(|i| i % groups).collect();
    slots.shuffle(&mut indexed_rng(seed, 1));
    let mut b = GraphBuilder::new();
    let mut facts = Vec::with_capacity(members);
    for (i, name) in m.iter().enumerate() {
        let group = &g[slots[i]];
        b.add_labeled(name, "/r/PartOf", group, 1.0);
        facts.push((name.clone(), group.clone()));
    }
    (b.build(), facts)
}
