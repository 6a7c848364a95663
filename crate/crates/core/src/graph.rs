//! Heterogeneous information network of users, items and entities.
//!
//! Nodes are interned by external key and receive dense ids in insertion
//! order. Adjacency is kept partitioned by the neighbour's node type and each
//! partition is sorted, so `neighbors_by_type` always returns ascending ids.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeType {
    User,
    Item,
    Entity,
}

impl NodeType {
    pub const ALL: [NodeType; 3] = [NodeType::User, NodeType::Item, NodeType::Entity];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            NodeType::User => 0,
            NodeType::Item => 1,
            NodeType::Entity => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeType::User => "user",
            NodeType::Item => "item",
            NodeType::Entity => "entity",
        }
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "user" => Ok(NodeType::User),
            "item" => Ok(NodeType::Item),
            "entity" => Ok(NodeType::Entity),
            other => Err(format!("unknown node type {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct HinGraph {
    types: Vec<NodeType>,
    keys: Vec<String>,
    index: HashMap<String, NodeId>,
    adjacency: Vec<[Vec<NodeId>; 3]>,
    edge_count: usize,
    frozen: bool,
}

impl HinGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns `key` with type `t`. Re-adding a known key returns its id.
    pub fn add_node(&mut self, key: &str, t: NodeType) -> Result<NodeId> {
        if self.frozen {
            return Err(Error::FrozenGraph);
        }
        if let Some(&id) = self.index.get(key) {
            let existing = self.types[id.index()];
            if existing != t {
                return Err(Error::NodeTypeConflict {
                    key: key.to_owned(),
                    existing,
                    requested: t,
                });
            }
            return Ok(id);
        }
        let id = NodeId(u32::try_from(self.types.len()).expect("more than u32::MAX nodes"));
        self.types.push(t);
        self.keys.push(key.to_owned());
        self.index.insert(key.to_owned(), id);
        self.adjacency.push(Default::default());
        Ok(id)
    }

    /// Adds the undirected edge `a`–`b`. Duplicate edges are ignored.
    pub fn add_edge(&mut self, a: NodeId, b: NodeId) -> Result<()> {
        if self.frozen {
            return Err(Error::FrozenGraph);
        }
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Err(Error::SelfLoop(a));
        }
        let (ta, tb) = (self.types[a.index()], self.types[b.index()]);
        let part = &mut self.adjacency[a.index()][tb.index()];
        match part.binary_search(&b) {
            Ok(_) => return Ok(()),
            Err(pos) => part.insert(pos, b),
        }
        let part = &mut self.adjacency[b.index()][ta.index()];
        if let Err(pos) = part.binary_search(&a) {
            part.insert(pos, a);
        }
        self.edge_count += 1;
        Ok(())
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn node_count(&self) -> usize {
        self.types.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.types.len() as u32).map(NodeId)
    }

    pub fn nodes_of_type(&self, t: NodeType) -> impl Iterator<Item = NodeId> + '_ {
        self.node_ids().filter(move |id| self.types[id.index()] == t)
    }

    pub fn node_type(&self, v: NodeId) -> Result<NodeType> {
        self.check(v)?;
        Ok(self.types[v.index()])
    }

    pub fn key(&self, v: NodeId) -> Result<&str> {
        self.check(v)?;
        Ok(&self.keys[v.index()])
    }

    pub fn lookup(&self, key: &str) -> Option<NodeId> {
        self.index.get(key).copied()
    }

    /// The type-`t` partition of `v`'s neighbourhood, ascending by id.
    pub fn neighbors_by_type(&self, v: NodeId, t: NodeType) -> Result<&[NodeId]> {
        self.check(v)?;
        Ok(&self.adjacency[v.index()][t.index()])
    }

    pub(crate) fn partitions(&self, v: NodeId) -> &[Vec<NodeId>; 3] {
        &self.adjacency[v.index()]
    }

    pub fn degree(&self, v: NodeId) -> Result<usize> {
        self.check(v)?;
        Ok(self.adjacency[v.index()].iter().map(Vec::len).sum())
    }

    /// All neighbours of `v` across types, ascending by id.
    pub fn neighbors(&self, v: NodeId) -> Result<Vec<NodeId>> {
        self.check(v)?;
        let mut out: Vec<NodeId> = self.adjacency[v.index()].iter().flatten().copied().collect();
        out.sort_unstable();
        Ok(out)
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        if a.index() >= self.types.len() || b.index() >= self.types.len() {
            return false;
        }
        self.adjacency[a.index()][self.types[b.index()].index()]
            .binary_search(&b)
            .is_ok()
    }

    /// Edges as `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for a in self.node_ids() {
            let mut row: Vec<NodeId> = self.adjacency[a.index()]
                .iter()
                .flatten()
                .copied()
                .filter(|&b| b > a)
                .collect();
            row.sort_unstable();
            out.extend(row.into_iter().map(|b| (a, b)));
        }
        out
    }

    fn check(&self, v: NodeId) -> Result<()> {
        if v.index() < self.types.len() {
            Ok(())
        } else {
            Err(Error::UnknownNode(v))
        }
    }

    fn nodes_tsv(&self) -> String {
        let mut s = String::new();
        for id in self.node_ids() {
            s.push_str(&format!("{}\t{}\t{}\n", id, self.types[id.index()], self.keys[id.index()]));
        }
        s
    }

    fn edges_tsv(&self) -> String {
        let mut s = String::new();
        for (a, b) in self.edges() {
            s.push_str(&format!("{a}\t{b}\n"));
        }
        s
    }

    /// Short content hash of the serialized graph, used to tie a walk corpus
    /// to the graph it was sampled from.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.nodes_tsv().as_bytes());
        hasher.update(b"--\n");
        hasher.update(self.edges_tsv().as_bytes());
        hex::encode(&hasher.finalize()[..8])
    }

    /// Writes `nodes.tsv` and `edges.tsv` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        write_file(&dir.join("nodes.tsv"), &self.nodes_tsv())?;
        write_file(&dir.join("edges.tsv"), &self.edges_tsv())
    }

    /// Reads a graph written by [`HinGraph::save`]; the result is frozen.
    pub fn load(dir: &Path) -> Result<Self> {
        let nodes_path = dir.join("nodes.tsv");
        let text = fs::read_to_string(&nodes_path).map_err(|e| Error::io(&nodes_path, e))?;
        let mut g = HinGraph::new();
        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let mut cols = line.splitn(3, '\t');
            let (Some(id), Some(t), Some(key)) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::parse(&nodes_path, lineno, "expected 3 tab-separated columns"));
            };
            let id: u32 = id
                .parse()
                .map_err(|_| Error::parse(&nodes_path, lineno, format!("bad node id {id:?}")))?;
            let t: NodeType = t.parse().map_err(|m| Error::parse(&nodes_path, lineno, m))?;
            if id as usize != g.node_count() {
                return Err(Error::parse(&nodes_path, lineno, "node ids must be contiguous from 0"));
            }
            if g.lookup(key).is_some() {
                return Err(Error::parse(&nodes_path, lineno, format!("duplicate key {key:?}")));
            }
            g.add_node(key, t)?;
        }
        let edges_path = dir.join("edges.tsv");
        let text = fs::read_to_string(&edges_path).map_err(|e| Error::io(&edges_path, e))?;
        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let parsed: Option<(u32, u32)> = line
                .split_once('\t')
                .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)));
            let Some((a, b)) = parsed else {
                return Err(Error::parse(&edges_path, lineno, "expected `<id>\\t<id>`"));
            };
            g.add_edge(NodeId(a), NodeId(b))
                .map_err(|e| Error::parse(&edges_path, lineno, e.to_string()))?;
        }
        g.freeze();
        Ok(g)
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(contents.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
