//! Acceptance suite: one test per criterion, each printing a PASS line
//! (run with `cargo test -p swan-core --test acceptance -- --nocapture`).
//!
//! C1  matcher hill-climb vs exact oracle equivalence and symmetry
//! C2  matcher identity / renaming exactness
//! C3  Penman round-trip stability plus malformed-input fuzzing
//! C4  z-test numerics and monotonicity
//! C5  paraphrase invariance at the graph level
//! C6  end-to-end stub pipeline determinism and trial accounting
//! C7  simulated detectability vs the closed-form binomial AUC
//! C8  bank builder filters and file round-trip
//! C9  ROC against pair enumeration
//! C10 optional live-endpoint smoke (ignored by default)

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use swan_core::amr::random::{random_graph, RandomGraphConfig};
use swan_core::bank::{bank_to_string, build_bank, BankParams, TemplateBank};
use swan_core::clients::{EchoTemplateLlm, EmbeddedPenmanParser, ScriptedParser};
use swan_core::detector::{detect, score_document, z_score, DetectConfig};
use swan_core::evalkit::{roc, simulate_detection};
use swan_core::injector::{inject, InjectionConfig};
use swan_core::matcher::{s2match, MatchConfig, MatchMode};
use swan_core::{parse_penman, serialize_penman, Decision};

fn graphs(seed: u64, count: usize, max_nodes: usize) -> Vec<swan_core::AmrGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = RandomGraphConfig {
        max_nodes,
        ..RandomGraphConfig::default()
    };
    (0..count).map(|_| random_graph(&mut rng, &cfg)).collect()
}

#[test]
fn c1_matcher_oracle_equivalence() {
    let start = Instant::now();
    let oracle_cfg = MatchConfig {
        mode: MatchMode::ExactOracle,
        ..MatchConfig::new()
    };
    let hill_cfg = MatchConfig {
        restarts: 16,
        ..MatchConfig::new()
    };
    let pool = graphs(101, 1000, 6);
    let mut equal = 0usize;
    let total = 500usize;
    for i in 0..total {
        let a = &pool[2 * i];
        let b = &pool[2 * i + 1];
        let oracle_ab = s2match(a, b, &oracle_cfg).unwrap().f1;
        let oracle_ba = s2match(b, a, &oracle_cfg).unwrap().f1;
        assert!(
            (oracle_ab - oracle_ba).abs() < 1e-12,
            "oracle symmetry violated on pair {i}: {oracle_ab} vs {oracle_ba}"
        );
        let hill = s2match(a, b, &hill_cfg).unwrap().f1;
        assert!(hill <= oracle_ab + 1e-9, "hill climb exceeded the oracle");
        if (hill - oracle_ab).abs() < 1e-9 {
            equal += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(
        equal as f64 >= 0.99 * total as f64,
        "hill climb matched the oracle on only {equal}/{total} pairs"
    );
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}, budget is 60s");
    println!(
        "[PASS] C1 matcher oracle equivalence: {equal}/{total} equal, symmetry 100%, {elapsed:?}"
    );
}

#[test]
fn c2_matcher_identity_and_renaming() {
    let cfg = MatchConfig::new();
    for (i, g) in graphs(202, 1000, 8).iter().enumerate() {
        let self_f1 = s2match(g, g, &cfg).unwrap().f1;
        assert!((self_f1 - 1.0).abs() < 1e-12, "identity failed on graph {i}");
        let renamed = g.renamed("r");
        let ren_f1 = s2match(g, &renamed, &cfg).unwrap().f1;
        assert!((ren_f1 - 1.0).abs() < 1e-12, "renaming failed on graph {i}");
    }
    println!("[PASS] C2 matcher identity/renaming: 1000 graphs exact to 1e-12");
}

#[test]
fn c3_penman_roundtrip_and_fuzz() {
    // Random graphs.
    for (i, g) in graphs(303, 1000, 8).iter().enumerate() {
        let reparsed = parse_penman(&serialize_penman(g)).unwrap();
        assert_eq!(
            swan_core::canonicalize(g),
            swan_core::canonicalize(&reparsed),
            "round trip unstable on random graph {i}"
        );
    }
    // Bundled fixture file.
    let fixture = include_str!("fixtures/penman_100.txt");
    let mut fixture_count = 0;
    for (i, line) in fixture.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let g = parse_penman(line).unwrap_or_else(|e| panic!("fixture line {i}: {e}"));
        let reparsed = parse_penman(&serialize_penman(&g)).unwrap();
        assert_eq!(
            swan_core::canonicalize(&g),
            swan_core::canonicalize(&reparsed),
            "round trip unstable on fixture line {i}"
        );
        fixture_count += 1;
    }
    assert_eq!(fixture_count, 100, "fixture must hold 100 graphs");
    // Malformed-input fuzzing: mutations of valid strings plus raw soup.
    // A panic anywhere fails the test; surviving all cases is the pass.
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let seeds: Vec<String> = fixture.lines().take(20).map(str::to_string).collect();
    const FUZZ_BYTES: &[u8] = b"()/:\" xby5-\n\t";
    for _ in 0..10_000 {
        let case = if rng.gen_bool(0.7) {
            let mut s = seeds[rng.gen_range(0..seeds.len())].clone().into_bytes();
            for _ in 0..rng.gen_range(1..6) {
                if s.is_empty() {
                    break;
                }
                let i = rng.gen_range(0..s.len());
                let b = FUZZ_BYTES[rng.gen_range(0..FUZZ_BYTES.len())];
                match rng.gen_range(0..3) {
                    0 => {
                        s.remove(i);
                    }
                    1 => s.insert(i, b),
                    _ => s[i] = b,
                }
            }
            String::from_utf8_lossy(&s).to_string()
        } else {
            (0..rng.gen_range(0..40))
                .map(|_| FUZZ_BYTES[rng.gen_range(0..FUZZ_BYTES.len())] as char)
                .collect()
        };
        let _ = parse_penman(&case);
    }
    println!("[PASS] C3 penman round-trip: 1000 random + 100 fixture graphs stable, 10000 fuzz cases crash-free");
}

#[test]
fn c4_z_test_numerics() {
    let z = z_score(5, 5, 0.2).unwrap();
    assert!((z - 4.4721).abs() < 1e-4, "z(5,5,0.2) = {z}");
    assert_eq!(z_score(1, 10, 0.1).unwrap(), 0.0, "z(k = lambda*n) must be exactly 0");
    assert_eq!(z_score(2, 4, 0.5).unwrap(), 0.0);
    assert_eq!(z_score(5, 50, 0.1).unwrap(), 0.0);
    assert_eq!(z_score(0, 4, 0.5).unwrap(), -2.0);
    for lambda in [0.01, 0.05, 0.1, 0.5] {
        for n in 1..=50usize {
            let mut prev = f64::NEG_INFINITY;
            for k in 0..=n {
                let z = z_score(k, n, lambda).unwrap();
                assert!(
                    z > prev,
                    "monotonicity violated at k={k}, n={n}, lambda={lambda}"
                );
                prev = z;
            }
        }
    }
    println!("[PASS] C4 z-test numerics: pinned values exact, monotone in k for n<=50");
}

#[test]
fn c5_paraphrase_invariance() {
    let start = Instant::now();
    let amr_21 =
        "(w / want-01 :ARG0 (b / boy) :ARG1 (b2 / believe-01 :ARG0 (g / girl) :ARG1 b))";
    let paraphrases = [
        "The boy desires the girl to believe him.",
        "The boy desires to be believed by the girl.",
        "The boy has a desire to be believed by the girl.",
        "The boy\u{2019}s desire is for the girl to believe him.",
    ];
    let mut parser = ScriptedParser::new(true);
    for p in &paraphrases {
        parser = parser.with_entry(p, amr_21);
    }
    let template = swan_core::abstract_template(&parse_penman(amr_21).unwrap());
    let bank = TemplateBank::from_templates(
        vec![(template, 5)],
        BankParams {
            min_freq: 1,
            max_freq: 100,
            min_nodes: 3,
            bank_size: 1,
            seed: 0,
        },
    )
    .unwrap();
    let paragraph = paraphrases.join(" ");
    let cfg = DetectConfig {
        lambda: 0.05,
        ..DetectConfig::default()
    };
    let report = detect(&paragraph, &bank, &cfg, &parser, &MatchConfig::new()).unwrap();
    assert_eq!(report.n, 4, "segmentation must find all four paraphrases");
    assert_eq!(report.k, 4);
    for s in &report.per_sentence {
        assert!(s.flagged);
        assert_eq!(s.best_score, 1.0, "best_score must be exactly 1.0");
    }
    assert_eq!(report.decision, Decision::Watermarked);
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 1, "took {elapsed:?}, budget is 1s");
    println!(
        "[PASS] C5 paraphrase invariance: all 4 paraphrases flagged at 1.0, z={:.4}, {elapsed:?}",
        report.z
    );
}

fn e2e_bank() -> TemplateBank {
    let params = BankParams {
        min_freq: 1,
        max_freq: 100,
        min_nodes: 3,
        bank_size: 12,
        seed: 0,
    };
    let graphs = (0..12)
        .map(|i| {
            (
                parse_penman(&format!(
                    "(a / want-{i:02} :ARG0 (b / N) :ARG1 (c / go-02 :ARG0 b))"
                ))
                .unwrap(),
                5,
            )
        })
        .collect();
    TemplateBank::from_templates(graphs, params).unwrap()
}

#[test]
fn c6_end_to_end_stub_pipeline() {
    let bank = e2e_bank();
    let match_cfg = MatchConfig::new();

    // Perfect generator: 50 paragraphs of 5 sentences, all accepted on the
    // first trial and all flagged at detection.
    let mut total_trials = 0usize;
    let mut total_sentences = 0usize;
    for paragraph in 0..50u64 {
        let cfg = InjectionConfig {
            n_sentences: 5,
            rng_seed: 1000 + paragraph,
            ..InjectionConfig::default()
        };
        let session = inject(
            "Start.",
            &bank,
            &cfg,
            &EchoTemplateLlm,
            &EmbeddedPenmanParser,
            &match_cfg,
        )
        .unwrap();
        total_trials += session
            .accepted
            .iter()
            .map(|a| a.trials_used)
            .sum::<usize>();
        total_sentences += session.accepted.len();
        let sentences: Vec<String> =
            session.accepted.iter().map(|a| a.sentence.clone()).collect();
        let report = score_document(
            &sentences,
            &bank,
            &DetectConfig::default(),
            &EmbeddedPenmanParser,
            &match_cfg,
        )
        .unwrap();
        assert_eq!(
            report.k, report.n,
            "paragraph {paragraph}: every sentence must flag"
        );
    }
    let mean_trials = total_trials as f64 / total_sentences as f64;
    assert_eq!(mean_trials, 1.0, "perfect generator must average 1.0 trials");

    // Never-matching generator: the full 50-trial budget per sentence, with
    // the fallback flag set.
    let never_cfg = InjectionConfig {
        n_sentences: 5,
        rng_seed: 42,
        ..InjectionConfig::default()
    };
    let never_llm = swan_core::clients::SequenceLlm::new(vec![
        "The weather is nice today.".to_string()
    ]);
    let session = inject(
        "Start.",
        &bank,
        &never_cfg,
        &never_llm,
        &EmbeddedPenmanParser,
        &match_cfg,
    )
    .unwrap();
    for a in &session.accepted {
        assert_eq!(a.trials_used, 50, "budget must be exactly exhausted");
        assert!(a.fallback, "fallback flag must be set");
    }

    // Determinism: byte-identical session logs across two runs.
    let det_cfg = InjectionConfig {
        n_sentences: 5,
        rng_seed: 7,
        ..InjectionConfig::default()
    };
    let run = || {
        serde_json::to_string(
            &inject(
                "Start.",
                &bank,
                &det_cfg,
                &EchoTemplateLlm,
                &EmbeddedPenmanParser,
                &match_cfg,
            )
            .unwrap(),
        )
        .unwrap()
    };
    assert_eq!(run(), run(), "session logs must be byte-identical");
    println!(
        "[PASS] C6 end-to-end stubs: mean trials 1.0 over 250 sentences, 50-trial exhaustion + fallback, byte-identical logs"
    );
}

fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let mut coeff = 1.0f64;
    (0..=n)
        .map(|k| {
            if k > 0 {
                coeff *= (n - k + 1) as f64 / k as f64;
            }
            coeff * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
        })
        .collect()
}

/// Closed-form AUC between two binomial hit-count distributions (z is
/// strictly increasing in k, so comparing counts equals comparing z).
fn closed_form_binomial_auc(n: usize, p_pos: f64, p_neg: f64) -> f64 {
    let pos = binomial_pmf(n, p_pos);
    let neg = binomial_pmf(n, p_neg);
    let mut auc = 0.0;
    for (kp, wp) in pos.iter().enumerate() {
        for (kn, wn) in neg.iter().enumerate() {
            if kp > kn {
                auc += wp * wn;
            } else if kp == kn {
                auc += 0.5 * wp * wn;
            }
        }
    }
    auc
}

#[test]
fn c7_simulated_detectability() {
    let start = Instant::now();
    let result = simulate_detection(250, 5, 0.9, 0.05, 0.05, 2024).unwrap();
    let closed = closed_form_binomial_auc(5, 0.9, 0.05);
    assert!(result.auc >= 0.99, "AUC {} below 0.99", result.auc);
    assert!(
        (result.auc - closed).abs() <= 0.01,
        "simulated AUC {} drifted from closed form {closed}",
        result.auc
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 5, "took {elapsed:?}, budget is 5s");
    println!(
        "[PASS] C7 simulated detectability: AUC {:.4} vs closed form {closed:.4}, {elapsed:?}",
        result.auc
    );
}

#[test]
fn c8_bank_builder_filters() {
    // Distinct shapes at frequencies 2, 3, 20, 21 (3-node) plus a 2-node
    // shape at frequency 5; survivors must be exactly the 3<=f<=20,
    // >=3-node shapes.
    let shapes: &[(&str, usize)] = &[
        ("(a / fall-01 :ARG0 (b / run-02 :ARG1 (c / eat-01)))", 2),
        ("(a / sleep-01 :ARG0 (b / run-02 :ARG1 (c / eat-01)))", 3),
        ("(a / see-01 :ARG0 (b / run-02 :ARG1 (c / eat-01)))", 20),
        ("(a / hear-01 :ARG0 (b / run-02 :ARG1 (c / eat-01)))", 21),
        ("(a / jump-03 :ARG0 (b / run-02))", 5),
    ];
    let corpus: Vec<_> = shapes
        .iter()
        .flat_map(|(s, n)| {
            std::iter::repeat_with(move || parse_penman(s).unwrap()).take(*n)
        })
        .collect();
    let params = BankParams {
        min_freq: 3,
        max_freq: 20,
        min_nodes: 3,
        bank_size: 2,
        seed: 0,
    };
    let bank = build_bank(corpus, &params).unwrap();
    assert_eq!(bank.len(), 2);
    let mut kept: Vec<(String, u32)> = bank
        .templates()
        .iter()
        .map(|t| (t.graph.concept(t.graph.root()).to_string(), t.frequency))
        .collect();
    kept.sort();
    assert_eq!(
        kept,
        vec![("see-01".to_string(), 20), ("sleep-01".to_string(), 3)]
    );
    // Byte-identical file round-trip.
    let text = bank_to_string(&bank);
    let reloaded = swan_core::bank::bank_from_str(&text).unwrap();
    assert_eq!(bank_to_string(&reloaded), text);
    println!("[PASS] C8 bank filters: survivors exactly {{f=3, f=20}} with >=3 nodes; file round-trips byte-identically");
}

#[test]
fn c9_roc_correctness() {
    let r = roc(&[2.0, 3.0], &[0.0, 1.0]).unwrap();
    assert_eq!(r.auc, 1.0, "perfect separation sentinel");
    let r = roc(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
    assert_eq!(r.auc, 0.5, "identical distributions sentinel");

    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for case in 0..200 {
        let np = rng.gen_range(1..40);
        let nn = rng.gen_range(1..40);
        let pos: Vec<f64> = (0..np).map(|_| rng.gen_range(0..12) as f64 / 3.0).collect();
        let neg: Vec<f64> = (0..nn).map(|_| rng.gen_range(0..12) as f64 / 3.0).collect();
        let fast = roc(&pos, &neg).unwrap().auc;
        let mut wins = 0.0;
        for &p in &pos {
            for &n in &neg {
                if p > n {
                    wins += 1.0;
                } else if p == n {
                    wins += 0.5;
                }
            }
        }
        let brute = wins / (pos.len() * neg.len()) as f64;
        assert!(
            (fast - brute).abs() < 1e-12,
            "case {case}: rank-based {fast} != enumeration {brute}"
        );
    }
    println!("[PASS] C9 ROC correctness: 200 random score sets match pair enumeration, sentinels exact");
}

/// Live smoke against real endpoints; opt in with
/// `cargo test -p swan-core --test acceptance -- --ignored` after setting
/// SWAN_LLM_ENDPOINT / SWAN_PARSER_ENDPOINT (plus key/model as needed).
#[test]
#[ignore = "requires live SWAN_LLM_ENDPOINT and SWAN_PARSER_ENDPOINT services"]
fn c10_live_smoke() {
    let llm_endpoint = std::env::var("SWAN_LLM_ENDPOINT").expect("SWAN_LLM_ENDPOINT not set");
    let parser_endpoint =
        std::env::var("SWAN_PARSER_ENDPOINT").expect("SWAN_PARSER_ENDPOINT not set");
    let mut llm_cfg = swan_core::clients::HttpConfig::new(llm_endpoint);
    llm_cfg.api_key = std::env::var("SWAN_LLM_API_KEY").ok();
    llm_cfg.model = std::env::var("SWAN_LLM_MODEL").ok();
    let llm = swan_core::clients::OpenAiChatClient::new(llm_cfg);
    let parser =
        swan_core::clients::HttpAmrParser::new(swan_core::clients::HttpConfig::new(parser_endpoint));

    let bank = e2e_bank();
    let cfg = InjectionConfig {
        n_sentences: 5,
        rng_seed: 1,
        ..InjectionConfig::default()
    };
    let session = inject(
        "The city council met on Tuesday to discuss the new budget.",
        &bank,
        &cfg,
        &llm,
        &parser,
        &MatchConfig::new(),
    )
    .unwrap();
    let sentences: Vec<String> = session.accepted.iter().map(|a| a.sentence.clone()).collect();
    let report = score_document(
        &sentences,
        &bank,
        &DetectConfig::default(),
        &parser,
        &MatchConfig::new(),
    )
    .unwrap();
    assert_eq!(report.decision, Decision::Watermarked);
    println!(
        "[PASS] C10 live smoke: injected 5 sentences, detected watermarked (z={:.3})",
        report.z
    );
}
