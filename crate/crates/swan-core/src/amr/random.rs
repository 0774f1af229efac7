//! Seeded random graph generation, shared by tests, the acceptance suite,
//! and benchmarks. Shapes mimic sentence AMRs: a spanning tree with
//! occasional re-entrant edges and constant attributes, concepts drawn from
//! a pool with deliberate collisions so alignment search is exercised.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{AmrGraph, AmrGraphBuilder, Constant, NodeRef};

const CONCEPTS: &[&str] = &[
    "want-01",
    "believe-01",
    "go-02",
    "say-01",
    "rise-01",
    "possible-01",
    "boy",
    "girl",
    "cat",
    "dog",
    "city",
    "team",
    "device",
    "idea",
    "water",
    "book",
];

const ROLES: &[&str] = &[
    ":ARG0", ":ARG1", ":ARG2", ":ARG3", ":mod", ":time", ":location", ":op1", ":op2", ":manner",
    ":purpose",
];

/// Knobs for [`random_graph`].
#[derive(Debug, Clone)]
pub struct RandomGraphConfig {
    pub max_nodes: usize,
    /// Probability of adding one extra re-entrant edge per node.
    pub reentrancy_prob: f64,
    /// Probability of attaching a constant attribute to a node.
    pub constant_prob: f64,
}

impl Default for RandomGraphConfig {
    fn default() -> Self {
        RandomGraphConfig {
            max_nodes: 6,
            reentrancy_prob: 0.25,
            constant_prob: 0.2,
        }
    }
}

/// Generates a valid random graph with 1..=max_nodes concept nodes.
pub fn random_graph(rng: &mut impl Rng, cfg: &RandomGraphConfig) -> AmrGraph {
    let n = rng.gen_range(1..=cfg.max_nodes.max(1));
    let mut b = AmrGraphBuilder::new();
    let mut ids = Vec::with_capacity(n);
    for i in 0..n {
        let concept = CONCEPTS.choose(rng).unwrap();
        let id = b.add_node(&format!("x{i}"), concept).unwrap();
        ids.push(id);
    }
    // Spanning tree: each node after the first hangs off an earlier one.
    for i in 1..n {
        let parent = ids[rng.gen_range(0..i)];
        let role = ROLES.choose(rng).unwrap();
        b.add_edge(parent, role, NodeRef::Node(ids[i])).unwrap();
    }
    for i in 0..n {
        if n > 1 && rng.gen_bool(cfg.reentrancy_prob) {
            let target = ids[rng.gen_range(0..n)];
            let role = ROLES.choose(rng).unwrap();
            b.add_edge(ids[i], role, NodeRef::Node(target)).unwrap();
        }
        if rng.gen_bool(cfg.constant_prob) {
            let c = match rng.gen_range(0..3) {
                0 => Constant::Number(rng.gen_range(1..100).to_string()),
                1 => Constant::Symbol("-".to_string()),
                _ => Constant::Text("Springfield".to_string()),
            };
            let role = if matches!(c, Constant::Symbol(_)) {
                ":polarity"
            } else {
                ":quant"
            };
            b.add_edge(ids[i], role, NodeRef::Constant(c)).unwrap();
        }
    }
    b.build().expect("generated graph is connected by construction")
}
