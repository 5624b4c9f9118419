//! Binary graph cache.
//!
//! All integers are little-endian.
//!
//! ```text
//! magic          4 bytes  "KGF1"
//! node_count     u32
//! node labels    node_count × (u32 byte length, UTF-8 bytes)
//! relation_count u32
//! relations      relation_count × (u32 byte length, UTF-8 bytes)
//! adjacency      node_count × (u32 degree, degree × (u32 relation, u32 target, f32 weight))
//! ```
//!
//! Node labels and relations are stored sorted; adjacency lists are sorted by
//! `(relation, target)`. Readers reject files that break either ordering.

use std::io::{Read, Write};

use sha2::{Digest, Sha256};

use super::graph::{Edge, KnowledgeGraph};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"KGF1";

pub fn write_graph<W: Write>(g: &KnowledgeGraph, mut w: W) -> Result<()> {
    w.write_all(&to_bytes(g))?;
    Ok(())
}

pub fn to_bytes(g: &KnowledgeGraph) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_strings(&mut out, g.labels());
    put_strings(&mut out, g.relations());
    for n in 0..g.node_count() {
        let edges = g.out_edges(n);
        out.extend_from_slice(&(edges.len() as u32).to_le_bytes());
        for e in edges {
            out.extend_from_slice(&e.relation.to_le_bytes());
            out.extend_from_slice(&e.target.to_le_bytes());
            out.extend_from_slice(&e.weight.to_le_bytes());
        }
    }
    out
}

fn put_strings(out: &mut Vec<u8>, items: &[String]) {
    out.extend_from_slice(&(items.len() as u32).to_le_bytes());
    for s in items {
        out.extend_from_slice(&(s.len() as u32).to_le_bytes());
        out.extend_from_slice(s.as_bytes());
    }
}

pub fn read_graph<R: Read>(mut r: R) -> Result<KnowledgeGraph> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    from_bytes(&bytes)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Corrupt("graph cache truncated".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn strings(&mut self) -> Result<Vec<String>> {
        let n = self.u32()? as usize;
        let mut out = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            let len = self.u32()? as usize;
            let s = std::str::from_utf8(self.take(len)?)
                .map_err(|_| Error::Corrupt("graph cache label is not UTF-8".into()))?;
            out.push(s.to_string());
        }
        Ok(out)
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<KnowledgeGraph> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(Error::Corrupt("missing KGF1 magic".into()));
    }
    let nodes = c.strings()?;
    let relations = c.strings()?;
    let mut adjacency = Vec::with_capacity(nodes.len());
    for _ in 0..nodes.len() {
        let deg = c.u32()? as usize;
        let mut edges = Vec::with_capacity(deg.min(1 << 20));
        for _ in 0..deg {
            edges.push(Edge {
                relation: c.u32()?,
                target: c.u32()?,
                weight: c.f32()?,
            });
        }
        adjacency.push(edges);
    }
    if c.pos != bytes.len() {
        return Err(Error::Corrupt("trailing bytes after graph".into()));
    }
    KnowledgeGraph::from_parts(nodes, relations, adjacency).map_err(Error::Corrupt)
}

/// Hex SHA-256 of the cache encoding; identifies a graph in provenance records.
pub fn graph_digest(g: &KnowledgeGraph) -> String {
    hex_digest(&to_bytes(g))
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::GraphBuilder;

    #[test]
    fn round_trip() {
        let mut b = GraphBuilder::new();
        b.add_labeled("stockholm", "/r/PartOf", "sweden", 1.0);
        b.add_labeled("sweden", "/r/PartOf", "europe", 0.5);
        b.add_labeled("sweden", "/r/IsA", "country", 2.0);
        let g = b.build();
        let bytes = to_bytes(&g);
        assert_eq!(&bytes[..4], b"KGF1");
        assert_eq!(from_bytes(&bytes).unwrap(), g);
    }

    #[test]
    fn empty_graph_round_trip() {
        let g = GraphBuilder::new().build();
        assert_eq!(to_bytes(&g), b"KGF1\0\0\0\0\0\0\0\0");
        assert_eq!(from_bytes(&to_bytes(&g)).unwrap(), g);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let mut b = GraphBuilder::new();
        b.add_labeled("a", "/r/IsA", "b", 1.0);
        let bytes = to_bytes(&b.build());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(from_bytes(&bad), Err(Error::Corrupt(_))));
        assert!(matches!(from_bytes(&bytes[..bytes.len() - 2]), Err(Error::Corrupt(_))));
    }

    #[test]
    fn rejects_out_of_range_target() {
        let mut b = GraphBuilder::new();
        b.add_labeled("a", "/r/IsA", "b", 1.0);
        let mut bytes = to_bytes(&b.build());
        // node 0's edge target, followed by its weight and node 1's zero degree
        let n = bytes.len();
        bytes[n - 12..n - 8].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(from_bytes(&bytes), Err(Error::Corrupt(_))));
    }
}
