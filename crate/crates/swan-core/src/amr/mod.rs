//! AMR graph data model: rooted, labeled, directed graphs of concept nodes
//! and relation edges, plus the Penman text format, triple decomposition,
//! and a canonical form used for corpus frequency counting.
//!
//! Graphs are immutable once built; construction goes through
//! [`AmrGraphBuilder`], which enforces variable uniqueness, role syntax,
//! and reachability from the root.

mod canonical;
mod corpus;
mod penman;
pub mod random;
mod triples;

pub use canonical::canonicalize;
pub use corpus::{read_corpus, read_corpus_str, CorpusLayout};
pub use penman::{parse_penman, serialize_penman, PenmanError};
pub use triples::{to_triples, Triple};

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Index of a concept node within one [`AmrGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn from_index(i: usize) -> Self {
        NodeId(i as u32)
    }
}

/// A constant edge target: quoted string, bare number, or bare symbol
/// (`-`, `+`, sentence-mode words). Constants never carry a concept label
/// or children of their own.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constant {
    /// Double-quoted string literal, stored without the quotes.
    Text(String),
    /// Numeric literal, stored as written so serialization is exact.
    Number(String),
    /// Bare symbol such as `-`, `+`, or `imperative`.
    Symbol(String),
}

impl Constant {
    /// Penman surface form of the constant.
    pub fn to_token(&self) -> String {
        match self {
            Constant::Text(s) => {
                let escaped = s.replace('\\', "\\\\").replace('"', "\\\"");
                format!("\"{escaped}\"")
            }
            Constant::Number(s) | Constant::Symbol(s) => s.clone(),
        }
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_token())
    }
}

/// Target of an edge: either another concept node or a constant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NodeRef {
    Node(NodeId),
    Constant(Constant),
}

/// One labeled edge. Role labels always begin with `:`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub source: NodeId,
    pub role: String,
    pub target: NodeRef,
}

/// Rooted, labeled, directed AMR graph.
///
/// Every node carries a variable name (unique within the graph) and a
/// concept label. Re-entrancy is expressed by multiple edges targeting the
/// same [`NodeId`]; constants live only in edge targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmrGraph {
    root: NodeId,
    vars: Vec<String>,
    concepts: Vec<String>,
    edges: Vec<Edge>,
}

/// Errors raised while assembling a graph by hand.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph has no nodes")]
    Empty,
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("role `{0}` must begin with ':'")]
    InvalidRole(String),
    #[error("node id out of range")]
    InvalidNodeId,
    #[error("node `{0}` is not reachable from the root")]
    UnreachableNode(String),
}

impl AmrGraph {
    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Number of variable-bearing concept nodes (constants excluded).
    pub fn concept_node_count(&self) -> usize {
        self.vars.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn concept(&self, id: NodeId) -> &str {
        &self.concepts[id.index()]
    }

    pub fn variable(&self, id: NodeId) -> &str {
        &self.vars[id.index()]
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.vars.len()).map(NodeId::from_index)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_by_variable(&self, var: &str) -> Option<NodeId> {
        self.vars
            .iter()
            .position(|v| v == var)
            .map(NodeId::from_index)
    }

    /// Outgoing edge indices of `id`, in insertion order.
    pub fn out_edges(&self, id: NodeId) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.source == id)
    }

    /// Copy of the graph with every variable renamed to `{prefix}{i}`,
    /// preserving node order and structure. Useful for renaming-invariance
    /// checks; never collides because indices are unique.
    pub fn renamed(&self, prefix: &str) -> AmrGraph {
        AmrGraph {
            root: self.root,
            vars: (0..self.vars.len()).map(|i| format!("{prefix}{i}")).collect(),
            concepts: self.concepts.clone(),
            edges: self.edges.clone(),
        }
    }

    /// Number of variable-bearing nodes reachable from `start`.
    pub(crate) fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vars.len()];
        for (i, e) in self.edges.iter().enumerate() {
            adj[e.source.index()].push(i);
        }
        adj
    }
}

/// Free-function form of [`AmrGraph::concept_node_count`].
pub fn concept_node_count(g: &AmrGraph) -> usize {
    g.concept_node_count()
}

/// Incremental constructor for [`AmrGraph`].
#[derive(Debug, Default)]
pub struct AmrGraphBuilder {
    vars: Vec<String>,
    concepts: Vec<String>,
    edges: Vec<Edge>,
    root: Option<NodeId>,
    by_var: HashMap<String, NodeId>,
}

impl AmrGraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a node; the first node added becomes the root unless
    /// [`set_root`](Self::set_root) is called.
    pub fn add_node(&mut self, var: &str, concept: &str) -> Result<NodeId, GraphError> {
        if self.by_var.contains_key(var) {
            return Err(GraphError::DuplicateVariable(var.to_string()));
        }
        let id = NodeId::from_index(self.vars.len());
        self.vars.push(var.to_string());
        self.concepts.push(concept.to_string());
        self.by_var.insert(var.to_string(), id);
        if self.root.is_none() {
            self.root = Some(id);
        }
        Ok(id)
    }

    pub fn node_by_variable(&self, var: &str) -> Option<NodeId> {
        self.by_var.get(var).copied()
    }

    pub fn set_root(&mut self, id: NodeId) -> Result<(), GraphError> {
        if id.index() >= self.vars.len() {
            return Err(GraphError::InvalidNodeId);
        }
        self.root = Some(id);
        Ok(())
    }

    pub fn add_edge(
        &mut self,
        source: NodeId,
        role: &str,
        target: NodeRef,
    ) -> Result<(), GraphError> {
        if !role.starts_with(':') || role.len() < 2 {
            return Err(GraphError::InvalidRole(role.to_string()));
        }
        if source.index() >= self.vars.len() {
            return Err(GraphError::InvalidNodeId);
        }
        if let NodeRef::Node(t) = target {
            if t.index() >= self.vars.len() {
                return Err(GraphError::InvalidNodeId);
            }
        }
        self.edges.push(Edge {
            source,
            role: role.to_string(),
            target,
        });
        Ok(())
    }

    /// Finishes the graph, verifying that every node is reachable from the
    /// root (re-entrant references count as edges).
    pub fn build(self) -> Result<AmrGraph, GraphError> {
        let root = self.root.ok_or(GraphError::Empty)?;
        let n = self.vars.len();
        let mut seen = vec![false; n];
        let mut stack = vec![root.index()];
        seen[root.index()] = true;
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            if let NodeRef::Node(t) = e.target {
                adj[e.source.index()].push(t.index());
            }
        }
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(GraphError::UnreachableNode(self.vars[i].clone()));
        }
        Ok(AmrGraph {
            root,
            vars: self.vars,
            concepts: self.concepts,
            edges: self.edges,
        })
    }
}
