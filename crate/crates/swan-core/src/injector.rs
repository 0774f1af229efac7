//! Watermark injection: generate N sentences by S2match-guided rejection
//! sampling. For each sentence a template is drawn from the bank; the LLM
//! is prompted with the template and the accumulated context; candidates
//! are parsed back to AMR and accepted once their similarity to the
//! template reaches the acceptance threshold. After M failed attempts the
//! template is swapped for a fresh one, up to T templates; if the whole
//! budget is exhausted the last attempt is kept as a fallback.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amr::{serialize_penman, AmrGraph};
use crate::bank::TemplateBank;
use crate::clients::{AmrParser, ClientError, LlmClient, LlmRequest};
use crate::matcher::{s2match, MatchConfig, MatchError};

#[derive(Debug, Error)]
pub enum InjectError {
    #[error("template bank is empty")]
    EmptyBank,
    #[error("invalid injection config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Match(#[from] MatchError),
}

/// Injection knobs. The per-sentence trial cap is
/// `max_templates * max_attempts` (50 by default).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InjectionConfig {
    pub n_sentences: usize,
    pub max_templates: usize,
    pub max_attempts: usize,
    pub theta_accept: f64,
    pub rng_seed: u64,
    /// When the budget is exhausted, keep the best-scoring attempt instead
    /// of the literal last one. Off by default.
    pub best_so_far_fallback: bool,
}

impl Default for InjectionConfig {
    fn default() -> Self {
        InjectionConfig {
            n_sentences: 5,
            max_templates: 10,
            max_attempts: 5,
            theta_accept: 0.7,
            rng_seed: 0,
            best_so_far_fallback: false,
        }
    }
}

impl InjectionConfig {
    fn validate(&self) -> Result<(), InjectError> {
        if self.n_sentences < 1 {
            return Err(InjectError::InvalidConfig("n_sentences must be >= 1".into()));
        }
        if self.max_templates < 1 || self.max_attempts < 1 {
            return Err(InjectError::InvalidConfig(
                "max_templates and max_attempts must be >= 1".into(),
            ));
        }
        if !(self.theta_accept > 0.0 && self.theta_accept <= 1.0) {
            return Err(InjectError::InvalidConfig(
                "theta_accept must be in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// One generation attempt, as recorded in the session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub sentence_index: usize,
    pub template_id: u32,
    /// 1-based attempt number within the template.
    pub attempt: usize,
    pub score: f64,
    pub accepted: bool,
    /// Set on the attempt whose text was adopted by the fallback path.
    pub fallback: bool,
}

/// One emitted sentence with its bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptedSentence {
    pub sentence: String,
    pub template_id: u32,
    pub trials_used: usize,
    pub score: f64,
    pub fallback: bool,
}

/// Full record of one injection run: the initial context, every trial, and
/// the accepted sentences in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionSession {
    pub s0: String,
    pub context: String,
    pub accepted: Vec<AcceptedSentence>,
    pub trial_log: Vec<TrialRecord>,
}

impl InjectionSession {
    /// Mean trials per sentence (the sampling-efficiency statistic).
    pub fn mean_trials(&self) -> f64 {
        if self.accepted.is_empty() {
            return 0.0;
        }
        self.accepted.iter().map(|a| a.trials_used as f64).sum::<f64>()
            / self.accepted.len() as f64
    }
}

/// Few-shot example shown in the generation prompt.
#[derive(Debug, Clone)]
pub struct Exemplar {
    pub graph: AmrGraph,
    pub sentence: String,
}

/// The three (template, sentence) pairs shipped with the crate.
pub fn default_exemplars() -> Vec<Exemplar> {
    let mut out = Vec::new();
    let mut template: Option<AmrGraph> = None;
    for line in include_str!("data/exemplars.txt").lines() {
        if let Some(penman) = line.strip_prefix("TEMPLATE: ") {
            template = Some(crate::amr::parse_penman(penman).expect("shipped exemplars parse"));
        } else if let Some(sentence) = line.strip_prefix("SENTENCE: ") {
            out.push(Exemplar {
                graph: template.take().expect("TEMPLATE precedes SENTENCE"),
                sentence: sentence.to_string(),
            });
        }
    }
    out
}

/// Renders the generation prompt: AMR/placeholder explanation, the example
/// block, placeholder instructions, the serialized template, the context,
/// and the closing single-sentence instruction.
pub fn render_generation_prompt(
    template: &AmrGraph,
    context: &str,
    examples: &[Exemplar],
) -> String {
    let example_text = examples
        .iter()
        .map(|e| format!("AMR:\n{}\nSentence: {}\n", serialize_penman(&e.graph), e.sentence))
        .collect::<Vec<_>>()
        .join("\n");
    format!(
        "AMR (Abstract Meaning Representation) is a graph-based representation of a sentence's meaning. Each node is a concept and edges represent semantic roles or relationships. Below are some examples of template AMRs and corresponding sentences:\n\
        {example_text}\n\
        \n\
        In the provided AMR, there are placeholders:\n\
        - \"NE\" for named entities (e.g., \"Alice\", \"France\", \"Google\").\n\
        - \"N\" for generic nouns (e.g., \"a device\", \"an object\").\n\
        - \"X\" for unspecified concepts (e.g., \"something\", \"an idea\").\n\
        \n\
        Instructions:\n\
        - Do not write \"NE\", \"N\", or \"X\" literally. Instead, replace them with appropriate English words to form a natural, meaningful sentence.\n\
        - Ensure the generated sentence aligns with both the AMR structure and the given context.\n\
        - Do not produce multiple sentences or lists.\n\
        - Produce exactly one coherent sentence.\n\
        \n\
        AMR:\n\
        {template}\n\
        Context: {context}\n\
        Please output only that one sentence.",
        template = serialize_penman(template),
    )
}

/// Strips reasoning markup and reduces a raw completion to one line: any
/// `<think>...</think>` block is removed and the final non-empty line wins.
pub fn sanitize_candidate(raw: &str) -> String {
    let mut text = raw.to_string();
    while let (Some(start), Some(end)) = (text.find("<think>"), text.find("</think>")) {
        if end > start {
            text.replace_range(start..end + "</think>".len(), " ");
        } else {
            break;
        }
    }
    text.lines()
        .rev()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or("")
        .to_string()
}

/// Runs the full injection loop: N sentences, each produced by rejection
/// sampling against templates drawn uniformly from the bank (fresh draws
/// per sentence, no repeats within one sentence's switches).
pub fn inject(
    s0: &str,
    bank: &TemplateBank,
    cfg: &InjectionConfig,
    llm: &dyn LlmClient,
    parser: &dyn AmrParser,
    match_cfg: &MatchConfig,
) -> Result<InjectionSession, InjectError> {
    inject_with_exemplars(s0, bank, cfg, llm, parser, match_cfg, &default_exemplars())
}

/// [`inject`] with a custom few-shot example block.
pub fn inject_with_exemplars(
    s0: &str,
    bank: &TemplateBank,
    cfg: &InjectionConfig,
    llm: &dyn LlmClient,
    parser: &dyn AmrParser,
    match_cfg: &MatchConfig,
    exemplars: &[Exemplar],
) -> Result<InjectionSession, InjectError> {
    cfg.validate()?;
    if bank.is_empty() {
        return Err(InjectError::EmptyBank);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut session = InjectionSession {
        s0: s0.to_string(),
        context: s0.to_string(),
        accepted: Vec::with_capacity(cfg.n_sentences),
        trial_log: Vec::new(),
    };

    for sentence_index in 0..cfg.n_sentences {
        // Uniform draw without replacement within this sentence's switches.
        let mut template_ids: Vec<u32> = bank.templates().iter().map(|t| t.id).collect();
        template_ids.shuffle(&mut rng);
        template_ids.truncate(cfg.max_templates);

        let mut trials_used = 0usize;
        let mut accepted: Option<AcceptedSentence> = None;
        let mut last: Option<(usize, String, u32, f64)> = None; // (log idx, text, template, score)
        let mut best: Option<(usize, String, u32, f64)> = None;

        'templates: for &template_id in &template_ids {
            let template = &bank.get(template_id).expect("id from this bank").graph;
            let prompt = render_generation_prompt(template, &session.context, exemplars);
            for attempt in 1..=cfg.max_attempts {
                let raw = llm.generate(&LlmRequest::new(prompt.clone()))?;
                let candidate = sanitize_candidate(&raw);
                trials_used += 1;
                let score = match parser.parse_sentence(&candidate) {
                    Ok(parsed) => s2match(&parsed.graph, template, match_cfg)?.f1,
                    Err(ClientError::Unparseable(_)) => 0.0,
                    Err(other) => return Err(other.into()),
                };
                let ok = score >= cfg.theta_accept;
                session.trial_log.push(TrialRecord {
                    sentence_index,
                    template_id,
                    attempt,
                    score,
                    accepted: ok,
                    fallback: false,
                });
                let log_idx = session.trial_log.len() - 1;
                last = Some((log_idx, candidate.clone(), template_id, score));
                if best.as_ref().is_none_or(|(_, _, _, s)| score > *s) {
                    best = Some((log_idx, candidate.clone(), template_id, score));
                }
                if ok {
                    accepted = Some(AcceptedSentence {
                        sentence: candidate,
                        template_id,
                        trials_used,
                        score,
                        fallback: false,
                    });
                    break 'templates;
                }
            }
        }

        let chosen = match accepted {
            Some(a) => a,
            None => {
                let (log_idx, sentence, template_id, score) = if cfg.best_so_far_fallback {
                    best.expect("at least one trial ran")
                } else {
                    last.expect("at least one trial ran")
                };
                session.trial_log[log_idx].fallback = true;
                AcceptedSentence {
                    sentence,
                    template_id,
                    trials_used,
                    score,
                    fallback: true,
                }
            }
        };
        session.context.push(' ');
        session.context.push_str(&chosen.sentence);
        session.accepted.push(chosen);
    }
    Ok(session)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amr::parse_penman;
    use crate::bank::{BankParams, TemplateBank};
    use crate::clients::{EchoTemplateLlm, EmbeddedPenmanParser, SequenceLlm};

    fn test_bank(n: usize) -> TemplateBank {
        let params = BankParams {
            min_freq: 1,
            max_freq: 100,
            min_nodes: 1,
            bank_size: n,
            seed: 0,
        };
        let graphs = (0..n)
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
    fn prompt_contains_required_lines() {
        let template = parse_penman("(w / want-01 :ARG0 (n / N))").unwrap();
        let p = render_generation_prompt(&template, "Once upon a time.", &default_exemplars());
        assert!(p.contains("\"NE\" for named entities"));
        assert!(p.contains("Please output only that one sentence."));
        assert!(p.contains("AMR:\n(w / want-01 :ARG0 (n / N))\nContext: Once upon a time."));
    }

    #[test]
    fn prompt_with_empty_examples_keeps_structure() {
        let template = parse_penman("(c / cat)").unwrap();
        let p = render_generation_prompt(&template, "ctx", &[]);
        assert!(p.contains("corresponding sentences:\n\n"));
        assert!(p.contains("AMR:\n(c / cat)\nContext: ctx"));
    }

    #[test]
    fn sanitize_strips_think_blocks_and_takes_last_line() {
        let raw = "<think>chain of thought\nmore</think>\nFirst draft.\nThe final sentence.";
        assert_eq!(sanitize_candidate(raw), "The final sentence.");
        assert_eq!(sanitize_candidate("one line"), "one line");
    }

    #[test]
    fn perfect_generator_accepts_every_sentence_first_try() {
        let bank = test_bank(12);
        let cfg = InjectionConfig {
            n_sentences: 4,
            rng_seed: 3,
            ..InjectionConfig::default()
        };
        let session = inject(
            "Start.",
            &bank,
            &cfg,
            &EchoTemplateLlm,
            &EmbeddedPenmanParser,
            &MatchConfig::new(),
        )
        .unwrap();
        assert_eq!(session.accepted.len(), 4);
        for a in &session.accepted {
            assert_eq!(a.trials_used, 1);
            assert!(!a.fallback);
            assert!(a.score >= 0.7);
        }
        assert_eq!(session.mean_trials(), 1.0);
    }

    #[test]
    fn never_matching_stub_exhausts_budget_and_falls_back() {
        let bank = test_bank(12);
        let cfg = InjectionConfig {
            n_sentences: 2,
            rng_seed: 5,
            ..InjectionConfig::default()
        };
        let llm = SequenceLlm::new(vec!["The weather is nice today.".into()]);
        let session = inject(
            "Start.",
            &bank,
            &cfg,
            &llm,
            &EmbeddedPenmanParser,
            &MatchConfig::new(),
        )
        .unwrap();
        for a in &session.accepted {
            assert_eq!(a.trials_used, 50);
            assert!(a.fallback);
            assert_eq!(a.score, 0.0);
        }
        let fallback_rows = session.trial_log.iter().filter(|t| t.fallback).count();
        assert_eq!(fallback_rows, 2);
    }

    #[test]
    fn context_accumulates_accepted_sentences() {
        let bank = test_bank(12);
        let cfg = InjectionConfig {
            n_sentences: 3,
            rng_seed: 11,
            ..InjectionConfig::default()
        };
        let session = inject(
            "Seed sentence.",
            &bank,
            &cfg,
            &EchoTemplateLlm,
            &EmbeddedPenmanParser,
            &MatchConfig::new(),
        )
        .unwrap();
        let mut expect = String::from("Seed sentence.");
        for a in &session.accepted {
            expect.push(' ');
            expect.push_str(&a.sentence);
        }
        assert_eq!(session.context, expect);
    }

    #[test]
    fn sessions_are_byte_reproducible() {
        let bank = test_bank(12);
        let cfg = InjectionConfig {
            n_sentences: 3,
            rng_seed: 9,
            ..InjectionConfig::default()
        };
        let run = || {
            let s = inject(
                "Start.",
                &bank,
                &cfg,
                &EchoTemplateLlm,
                &EmbeddedPenmanParser,
                &MatchConfig::new(),
            )
            .unwrap();
            serde_json::to_string(&s).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn template_switch_is_logged_mid_sentence() {
        // Script: fail 5 attempts on the first template, then 2 on the
        // second, then succeed on the 3rd attempt of the second template?
        // Instead: succeed on the 12th call overall = templates 1-2 fail
        // (5+5), third template 2nd attempt matches.
        let bank = test_bank(12);
        let cfg = InjectionConfig {
            n_sentences: 1,
            rng_seed: 2,
            ..InjectionConfig::default()
        };
        // Determine which template the third draw will be by running a
        // throwaway injection that records the order.
        let probe = inject(
            "Start.",
            &bank,
            &InjectionConfig {
                n_sentences: 1,
                theta_accept: 1.0,
                rng_seed: 2,
                ..InjectionConfig::default()
            },
            &SequenceLlm::new(vec!["no graph here".into()]),
            &EmbeddedPenmanParser,
            &MatchConfig::new(),
        )
        .unwrap();
        let order: Vec<u32> = {
            let mut seen = Vec::new();
            for t in &probe.trial_log {
                if seen.last() != Some(&t.template_id) {
                    seen.push(t.template_id);
                }
            }
            seen
        };
        let third = bank.get(order[2]).unwrap();
        let matching = format!(
            "A stub sentence realizing {}",
            crate::amr::serialize_penman(&third.graph)
        );
        let mut replies = vec!["no graph here".to_string(); 11];
        replies.push(matching);
        let session = inject(
            "Start.",
            &bank,
            &cfg,
            &SequenceLlm::new(replies),
            &EmbeddedPenmanParser,
            &MatchConfig::new(),
        )
        .unwrap();
        let a = &session.accepted[0];
        assert_eq!(a.trials_used, 12);
        assert_eq!(a.template_id, order[2]);
        assert!(!a.fallback);
        let templates_tried: Vec<u32> = {
            let mut seen = Vec::new();
            for t in &session.trial_log {
                if seen.last() != Some(&t.template_id) {
                    seen.push(t.template_id);
                }
            }
            seen
        };
        assert_eq!(templates_tried, order[..3].to_vec());
    }

    #[test]
    fn best_so_far_fallback_keeps_best_attempt() {
        let bank = test_bank(1);
        // One template, 5 attempts; the middle attempt carries a real graph
        // that scores below theta but above zero.
        let template = &bank.get(0).unwrap().graph;
        let partial = format!(
            "A stub sentence realizing (a / want-00 :ARG0 (b / {}))",
            "wrongconcept"
        );
        let _ = template;
        let replies = vec![
            "no graph".to_string(),
            partial.clone(),
            "no graph".to_string(),
            "no graph".to_string(),
            "no graph".to_string(),
        ];
        let cfg = InjectionConfig {
            n_sentences: 1,
            max_templates: 1,
            max_attempts: 5,
            theta_accept: 0.99,
            rng_seed: 0,
            best_so_far_fallback: true,
        };
        let session = inject(
            "Start.",
            &bank,
            &cfg,
            &SequenceLlm::new(replies),
            &EmbeddedPenmanParser,
            &MatchConfig::new(),
        )
        .unwrap();
        let a = &session.accepted[0];
        assert!(a.fallback);
        assert_eq!(a.sentence, partial);
        assert!(a.score > 0.0);
        assert_eq!(a.trials_used, 5);
    }
}
