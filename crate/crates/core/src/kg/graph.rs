use std::collections::{BTreeMap, HashMap};

use super::assertion::{concept_label, Assertion};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub relation: u32,
    pub target: u32,
    /// Stored for completeness; walk sampling is uniform.
    pub weight: f32,
}

/// Directed multigraph over normalized concept labels.
///
/// Nodes and relations are indexed in lexicographic order and every
/// adjacency list is sorted by `(relation, target)`, so the same triple set
/// always yields the same graph regardless of input order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KnowledgeGraph {
    nodes: Vec<String>,
    relations: Vec<String>,
    adjacency: Vec<Vec<Edge>>,
    node_index: HashMap<String, u32>,
}

/// A fully resolved triple.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub sinks: usize,
    pub relation_histogram: BTreeMap<String, usize>,
}

/// Accumulates triples; duplicates collapse and keep their largest weight.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    triples: BTreeMap<(String, String, String), f64>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an assertion whose URIs normalize to non-empty labels. Returns
    /// false when either concept has no term.
    pub fn add_assertion(&mut self, a: &Assertion) -> bool {
        match (concept_label(&a.start), concept_label(&a.end)) {
            (Some(s), Some(o)) => {
                self.add_labeled(&s, &a.relation, &o, a.weight);
                true
            }
            _ => false,
        }
    }

    pub fn add_labeled(&mut self, subject: &str, relation: &str, object: &str, weight: f64) {
        let key = (subject.to_string(), relation.to_string(), object.to_string());
        let w = self.triples.entry(key).or_insert(weight);
        if weight > *w {
            *w = weight;
        }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn merge(&mut self, other: GraphBuilder) {
        for ((s, r, o), w) in other.triples {
            self.add_labeled(&s, &r, &o, w);
        }
    }

    pub fn build(self) -> KnowledgeGraph {
        let mut nodes: Vec<String> = Vec::new();
        let mut relations: Vec<String> = Vec::new();
        for (s, r, o) in self.triples.keys() {
            nodes.push(s.clone());
            nodes.push(o.clone());
            relations.push(r.clone());
        }
        nodes.sort();
        nodes.dedup();
        relations.sort();
        relations.dedup();
        let node_index: HashMap<String, u32> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        let rel_index: HashMap<&str, u32> = relations
            .iter()
            .enumerate()
            .map(|(i, r)| (r.as_str(), i as u32))
            .collect();
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for ((s, r, o), w) in &self.triples {
            adjacency[node_index[s] as usize].push(Edge {
                relation: rel_index[r.as_str()],
                target: node_index[o],
                weight: *w as f32,
            });
        }
        for edges in &mut adjacency {
            edges.sort_by_key(|e| (e.relation, e.target));
        }
        KnowledgeGraph {
            nodes,
            relations,
            adjacency,
            node_index,
        }
    }
}

/// Builds a graph from a stream of assertions.
pub fn build_graph<I: IntoIterator<Item = Assertion>>(assertions: I) -> KnowledgeGraph {
    let mut b = GraphBuilder::new();
    for a in assertions {
        b.add_assertion(&a);
    }
    b.build()
}

impl KnowledgeGraph {
    /// Assembles a graph from raw parts, checking every structural invariant.
    pub(crate) fn from_parts(
        nodes: Vec<String>,
        relations: Vec<String>,
        adjacency: Vec<Vec<Edge>>,
    ) -> Result<Self, String> {
        if adjacency.len() != nodes.len() {
            return Err("adjacency count differs from node count".into());
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err("node labels not strictly sorted".into());
        }
        if relations.windows(2).any(|w| w[0] >= w[1]) {
            return Err("relations not strictly sorted".into());
        }
        for edges in &adjacency {
            for e in edges {
                if e.target as usize >= nodes.len() || e.relation as usize >= relations.len() {
                    return Err("edge index out of range".into());
                }
            }
            if edges
                .windows(2)
                .any(|w| (w[0].relation, w[0].target) >= (w[1].relation, w[1].target))
            {
                return Err("adjacency list not strictly sorted".into());
            }
        }
        let node_index = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        Ok(KnowledgeGraph {
            nodes,
            relations,
            adjacency,
            node_index,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn label(&self, node: usize) -> &str {
        &self.nodes[node]
    }

    pub fn labels(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_id(&self, label: &str) -> Option<usize> {
        self.node_index.get(label).map(|&i| i as usize)
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn relation(&self, id: u32) -> &str {
        &self.relations[id as usize]
    }

    pub fn out_edges(&self, node: usize) -> &[Edge] {
        &self.adjacency[node]
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn is_sink(&self, node: usize) -> bool {
        self.adjacency[node].is_empty()
    }

    /// Every edge as a labeled triple, in adjacency order.
    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.adjacency.iter().enumerate().flat_map(move |(s, edges)| {
            edges.iter().map(move |e| Triple {
                subject: self.nodes[s].clone(),
                relation: self.relations[e.relation as usize].clone(),
                object: self.nodes[e.target as usize].clone(),
            })
        })
    }

    pub fn stats(&self) -> GraphStats {
        let mut relation_histogram = BTreeMap::new();
        for edges in &self.adjacency {
            for e in edges {
                *relation_histogram
                    .entry(self.relations[e.relation as usize].clone())
                    .or_insert(0) += 1;
            }
        }
        GraphStats {
            nodes: self.node_count(),
            edges: self.edge_count(),
            sinks: (0..self.node_count()).filter(|&n| self.is_sink(n)).count(),
            relation_histogram,
        }
    }
}

pub fn graph_stats(g: &KnowledgeGraph) -> GraphStats {
    g.stats()
}
