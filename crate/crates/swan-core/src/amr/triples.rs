//! Triple decomposition: the atomic comparison units used by the matcher.
//!
//! A graph with `V` variables and `E` edges yields exactly `V` instance
//! triples, one top triple, and `E` relation/attribute triples.

use super::{AmrGraph, Constant, NodeRef};

/// Atomic element of graph comparison. Attribute triples carry constant
/// targets; relation triples carry variable targets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Triple {
    Instance {
        var: String,
        concept: String,
    },
    Top {
        var: String,
    },
    Relation {
        source: String,
        role: String,
        target: String,
    },
    Attribute {
        source: String,
        role: String,
        value: Constant,
    },
}

/// Decomposes a graph into its triples, sorted by kind, then source
/// variable, then role (deterministic for any input).
pub fn to_triples(g: &AmrGraph) -> Vec<Triple> {
    let mut out = Vec::with_capacity(g.concept_node_count() + 1 + g.edge_count());
    for id in g.node_ids() {
        out.push(Triple::Instance {
            var: g.variable(id).to_string(),
            concept: g.concept(id).to_string(),
        });
    }
    out.push(Triple::Top {
        var: g.variable(g.root()).to_string(),
    });
    for e in g.edges() {
        match &e.target {
            NodeRef::Node(t) => out.push(Triple::Relation {
                source: g.variable(e.source).to_string(),
                role: e.role.clone(),
                target: g.variable(*t).to_string(),
            }),
            NodeRef::Constant(c) => out.push(Triple::Attribute {
                source: g.variable(e.source).to_string(),
                role: e.role.clone(),
                value: c.clone(),
            }),
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amr::parse_penman;

    #[test]
    fn single_node_yields_instance_and_top() {
        let g = parse_penman("(c / cat)").unwrap();
        let ts = to_triples(&g);
        assert_eq!(
            ts,
            vec![
                Triple::Instance {
                    var: "c".into(),
                    concept: "cat".into()
                },
                Triple::Top { var: "c".into() },
            ]
        );
    }

    #[test]
    fn want_believe_yields_nine_triples() {
        let g = parse_penman(
            "(w / want-01 :ARG0 (b / boy) :ARG1 (b2 / believe-01 :ARG0 (g / girl) :ARG1 b))",
        )
        .unwrap();
        let ts = to_triples(&g);
        assert_eq!(ts.len(), 9);
        let instances = ts
            .iter()
            .filter(|t| matches!(t, Triple::Instance { .. }))
            .count();
        let relations = ts
            .iter()
            .filter(|t| matches!(t, Triple::Relation { .. }))
            .count();
        assert_eq!((instances, relations), (4, 4));
    }

    #[test]
    fn constant_target_yields_attribute() {
        let g = parse_penman("(t / temperature :quant 5)").unwrap();
        let ts = to_triples(&g);
        assert!(ts.contains(&Triple::Attribute {
            source: "t".into(),
            role: ":quant".into(),
            value: Constant::Number("5".into()),
        }));
    }

    #[test]
    fn triple_count_law() {
        for src in [
            "(c / cat)",
            "(a / a :ARG0 a)",
            "(w / want-01 :ARG0 (b / boy) :ARG1 (b2 / believe-01 :ARG0 (g / girl) :ARG1 b))",
            "(t / t1 :quant 5 :mod (u / u1))",
        ] {
            let g = parse_penman(src).unwrap();
            assert_eq!(
                to_triples(&g).len(),
                g.concept_node_count() + 1 + g.edge_count(),
                "law failed for {src}"
            );
        }
    }
}
