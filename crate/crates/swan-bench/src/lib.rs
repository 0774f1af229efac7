//! Shared inputs for the benchmark targets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use swan_core::amr::random::{random_graph, RandomGraphConfig};
use swan_core::bank::{BankParams, TemplateBank};
use swan_core::{parse_penman, AmrGraph};

pub const WANT_BELIEVE: &str =
    "(w / want-01 :ARG0 (b / boy) :ARG1 (b2 / believe-01 :ARG0 (g / girl) :ARG1 b))";

/// Deterministic random graphs for matcher and canonicalization benches.
pub fn graph_pairs(count: usize, max_nodes: usize) -> Vec<(AmrGraph, AmrGraph)> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = RandomGraphConfig {
        max_nodes,
        ..RandomGraphConfig::default()
    };
    (0..count)
        .map(|_| (random_graph(&mut rng, &cfg), random_graph(&mut rng, &cfg)))
        .collect()
}

/// A placeholder-template bank shaped like production banks.
pub fn bench_bank(size: usize) -> TemplateBank {
    let params = BankParams {
        min_freq: 1,
        max_freq: 100,
        min_nodes: 3,
        bank_size: size,
        seed: 0,
    };
    let graphs = (0..size)
        .map(|i| {
            (
                parse_penman(&format!(
                    "(a / want-{i:02} :ARG0 (b / N) :ARG1 (c / go-02 :ARG0 b :ARG1 (d / NE)))"
                ))
                .unwrap(),
                5,
            )
        })
        .collect();
    TemplateBank::from_templates(graphs, params).unwrap()
}
