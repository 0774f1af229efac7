//! Property-based checks: the parser never panics, round-trips are
//! isomorphism-stable, the triple-count law holds, and the z statistic and
//! ROC behave as the formulas demand.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use swan_core::amr::random::{random_graph, RandomGraphConfig};
use swan_core::amr::to_triples;
use swan_core::{canonicalize, parse_penman, serialize_penman, z_score};

fn seeded_graph(seed: u64, max_nodes: usize) -> swan_core::AmrGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_graph(
        &mut rng,
        &RandomGraphConfig {
            max_nodes,
            ..RandomGraphConfig::default()
        },
    )
}

proptest! {
    /// Arbitrary input must produce Ok or a structured error, never a panic.
    #[test]
    fn parser_never_panics(input in ".*") {
        let _ = parse_penman(&input);
    }

    /// Paren-and-token soup aimed at the grammar's edge cases.
    #[test]
    fn parser_survives_paren_soup(tokens in proptest::collection::vec(
        prop_oneof![
            Just("(".to_string()),
            Just(")".to_string()),
            Just("/".to_string()),
            Just(":ARG0".to_string()),
            Just("x".to_string()),
            Just("\"q\"".to_string()),
            Just("5".to_string()),
            Just("-".to_string()),
        ],
        0..24,
    )) {
        let _ = parse_penman(&tokens.join(" "));
    }

    #[test]
    fn roundtrip_is_isomorphism_stable(seed in any::<u64>()) {
        let g = seeded_graph(seed, 8);
        let reparsed = parse_penman(&serialize_penman(&g)).unwrap();
        prop_assert_eq!(canonicalize(&g), canonicalize(&reparsed));
    }

    #[test]
    fn triple_count_law_holds(seed in any::<u64>()) {
        let g = seeded_graph(seed, 8);
        prop_assert_eq!(
            to_triples(&g).len(),
            g.concept_node_count() + 1 + g.edge_count()
        );
    }

    #[test]
    fn canonical_is_rename_invariant(seed in any::<u64>()) {
        let g = seeded_graph(seed, 7);
        prop_assert_eq!(canonicalize(&g), canonicalize(&g.renamed("p")));
    }

    #[test]
    fn z_is_finite_and_signed_correctly(n in 1usize..200, k_frac in 0.0f64..=1.0, lambda in 0.001f64..0.999) {
        let k = ((n as f64) * k_frac).round() as usize;
        let k = k.min(n);
        let z = z_score(k, n, lambda).unwrap();
        prop_assert!(z.is_finite());
        let frac = k as f64 / n as f64;
        if frac > lambda {
            prop_assert!(z > 0.0);
        } else if frac < lambda {
            prop_assert!(z < 0.0);
        }
    }

    /// AUC is invariant under strictly increasing transforms of all scores.
    #[test]
    fn roc_invariant_under_affine_positive_transform(
        pos in proptest::collection::vec(0.0f64..100.0, 1..40),
        neg in proptest::collection::vec(0.0f64..100.0, 1..40),
        scale in 0.1f64..10.0,
        shift in -50.0f64..50.0,
    ) {
        let base = swan_core::roc(&pos, &neg).unwrap();
        let tp: Vec<f64> = pos.iter().map(|x| x * scale + shift).collect();
        let tn: Vec<f64> = neg.iter().map(|x| x * scale + shift).collect();
        let transformed = swan_core::roc(&tp, &tn).unwrap();
        prop_assert!((base.auc - transformed.auc).abs() < 1e-9);
    }
}
