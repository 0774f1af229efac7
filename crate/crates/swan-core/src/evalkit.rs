//! Desk-scale experiment harness: ROC/AUC/TPR@FPR metrics, the
//! paraphrase-attack driver, sampling-efficiency histograms, bank-size
//! ablation, detection simulation, and LLM-judge quality scoring.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amr::AmrGraph;
use crate::bank::{build_bank, BankError, BankParams, TemplateBank};
use crate::clients::{ClientError, AmrParser, LlmClient, LlmRequest, Paraphraser};
use crate::detector::{score_document, z_score, DetectConfig, DetectError};
use crate::injector::InjectionSession;
use crate::matcher::MatchConfig;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("input must be nonempty")]
    EmptyInput,
    #[error("judge returned malformed output: {0}")]
    JudgeFormat(String),
    #[error("probability out of range: {0}")]
    InvalidProbability(f64),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Bank(#[from] BankError),
}

/// TPR at a fixed false-positive rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TprAtFpr {
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC summary over positive- and negative-class scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocResult {
    pub auc: f64,
    pub tpr_at: Vec<TprAtFpr>,
    pub scores_pos: Vec<f64>,
    pub scores_neg: Vec<f64>,
}

/// The fixed low-FPR operating points reported everywhere.
pub const REPORTED_FPRS: [f64; 2] = [0.01, 0.05];

/// Computes AUC (rank-based Mann-Whitney with tie correction, equal to
/// pair enumeration with half credit for ties) and TPR at the reported
/// FPRs using the conservative threshold whose empirical FPR stays at or
/// under the target.
pub fn roc(pos: &[f64], neg: &[f64]) -> Result<RocResult, EvalError> {
    if pos.is_empty() || neg.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut combined: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    combined.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("scores must not be NaN"));

    // Average ranks within tie groups.
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < combined.len() {
        let mut j = i + 1;
        while j < combined.len() && combined[j].0 == combined[i].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0; // mean of ranks i+1 ..= j
        let pos_in_group = combined[i..j].iter().filter(|(_, p)| *p).count();
        rank_sum_pos += avg_rank * pos_in_group as f64;
        i = j;
    }
    let np = pos.len() as f64;
    let nn = neg.len() as f64;
    let u = rank_sum_pos - np * (np + 1.0) / 2.0;
    let auc = u / (np * nn);

    let tpr_at = REPORTED_FPRS
        .iter()
        .map(|&fpr| TprAtFpr {
            fpr,
            tpr: tpr_at_fpr(pos, neg, fpr),
        })
        .collect();

    Ok(RocResult {
        auc,
        tpr_at,
        scores_pos: pos.to_vec(),
        scores_neg: neg.to_vec(),
    })
}

/// Fraction of positives strictly above the (1-f) empirical quantile of
/// the negatives, with the threshold chosen so the empirical FPR is <= f.
fn tpr_at_fpr(pos: &[f64], neg: &[f64], f: f64) -> f64 {
    let allowed = (f * neg.len() as f64).floor() as usize;
    if allowed >= neg.len() {
        return 1.0;
    }
    let mut neg_desc = neg.to_vec();
    neg_desc.sort_by(|a, b| b.partial_cmp(a).expect("scores must not be NaN"));
    let threshold = neg_desc[allowed];
    pos.iter().filter(|&&p| p > threshold).count() as f64 / pos.len() as f64
}

/// Synthetic detectability check: paragraphs of independent per-sentence
/// Bernoulli hits at the positive/negative rates, z-scored and ROC'd.
/// Deterministic given the seed.
pub fn simulate_detection(
    n_paragraphs: usize,
    sentences_per_paragraph: usize,
    p_hit_pos: f64,
    p_hit_neg: f64,
    lambda: f64,
    seed: u64,
) -> Result<RocResult, EvalError> {
    for p in [p_hit_pos, p_hit_neg] {
        if !(0.0..=1.0).contains(&p) {
            return Err(EvalError::InvalidProbability(p));
        }
    }
    if n_paragraphs == 0 || sentences_per_paragraph == 0 {
        return Err(EvalError::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |p: f64| -> Result<f64, EvalError> {
        let k = (0..sentences_per_paragraph)
            .filter(|_| rng.gen_bool(p))
            .count();
        Ok(z_score(k, sentences_per_paragraph, lambda)?)
    };
    let pos: Vec<f64> = (0..n_paragraphs)
        .map(|_| draw(p_hit_pos))
        .collect::<Result<_, _>>()?;
    let neg: Vec<f64> = (0..n_paragraphs)
        .map(|_| draw(p_hit_neg))
        .collect::<Result<_, _>>()?;
    roc(&pos, &neg)
}

/// Bucketed distribution of rejection-sampling trials per sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialBucket {
    pub lo: usize,
    pub hi: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialHistogram {
    pub buckets: Vec<TrialBucket>,
    pub mean: f64,
    pub total_sentences: usize,
}

/// Histograms `trials_used` over all sentences of all sessions in buckets
/// of width 5 (1-5, 6-10, ..., 46-50, extended when a run used a larger
/// budget), plus the mean.
pub fn trial_histogram(sessions: &[InjectionSession]) -> Result<TrialHistogram, EvalError> {
    let trials: Vec<usize> = sessions
        .iter()
        .flat_map(|s| s.accepted.iter().map(|a| a.trials_used))
        .collect();
    if trials.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let max = *trials.iter().max().expect("nonempty");
    let n_buckets = (max.max(50)).div_ceil(5);
    let mut buckets: Vec<TrialBucket> = (0..n_buckets)
        .map(|b| TrialBucket {
            lo: 5 * b + 1,
            hi: 5 * b + 5,
            count: 0,
        })
        .collect();
    for &t in &trials {
        buckets[(t - 1) / 5].count += 1;
    }
    let mean = trials.iter().sum::<usize>() as f64 / trials.len() as f64;
    Ok(TrialHistogram {
        buckets,
        mean,
        total_sentences: trials.len(),
    })
}

/// LLM-judge quality scores on the three rubric axes, each in [0,5].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityScore {
    pub coherence: f64,
    pub fluency: f64,
    pub diversity: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JudgeReply {
    coherence_score: f64,
    fluency_score: f64,
    diversity_score: f64,
}

/// Renders the writing-quality rubric prompt for one paragraph.
pub fn render_quality_prompt(paragraph: &str) -> String {
    format!(
        "You are an expert writing quality evaluator.\n\
        \n\
        You will assess a GENERATED PARAGRAPH using the following criteria. For each, assign a score from 1 to 5 (decimals allowed), using the descriptions below.\n\
        \n\
        1. **Coherence**: Measures how logically and clearly the ideas are organized and connected.\n\
        \x20  - 1: Incoherent; sentences are unrelated or confusing.\n\
        \x20  - 2: Poor transitions or unclear relationships between ideas.\n\
        \x20  - 3: Basic logical flow, but some awkward connections.\n\
        \x20  - 4: Mostly logical and clear, with minor lapses.\n\
        \x20  - 5: Highly logical and seamless flow of ideas.\n\
        \n\
        2. **Fluency**: Assesses the grammatical correctness and naturalness of the language.\n\
        \x20  - 1: Grammatically broken or unreadable.\n\
        \x20  - 2: Understandable but awkward or error-prone.\n\
        \x20  - 3: Generally readable, some minor grammatical errors or odd phrasing.\n\
        \x20  - 4: Well-written with only occasional issues.\n\
        \x20  - 5: Grammatically correct and naturally flowing throughout.\n\
        \n\
        3. **Diversity**: Use of varied vocabulary and sentence structure, avoiding repetition.\n\
        \x20  - 1: Extremely repetitive or formulaic.\n\
        \x20  - 2: Some repetition with occasional variation.\n\
        \x20  - 3: Moderate variety; not monotonous.\n\
        \x20  - 4: Good diversity in language and structure.\n\
        \x20  - 5: Highly expressive and varied without redundancy.\n\
        \n\
        **Scoring Instructions**:\n\
        - Return a score for each of the three dimensions above.\n\
        - You may use decimal values (e.g., 2.5, 4.7).\n\
        \n\
        **Output Format**:\n\
        Respond with a **valid JSON object only** in this exact format:\n\
        \n\
        {{\n\
        \x20 \"coherence_score\":  float,\n\
        \x20 \"fluency_score\":    float,\n\
        \x20 \"diversity_score\":  float\n\
        }}\n\
        \n\
        GENERATED PARAGRAPH:\n\
        {paragraph}"
    )
}

/// Rates one paragraph with the judge LLM, parsing the strict three-key
/// JSON reply and clamping scores to [0,5]. A malformed reply earns one
/// re-ask; a second failure is a [`EvalError::JudgeFormat`].
pub fn judge_quality(paragraph: &str, judge: &dyn LlmClient) -> Result<QualityScore, EvalError> {
    if paragraph.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let prompt = render_quality_prompt(paragraph);
    let first = judge.generate(&LlmRequest::new(prompt.clone()))?;
    match parse_judge_reply(&first) {
        Ok(score) => Ok(score),
        Err(_) => {
            let retry_prompt = format!(
                "{prompt}\n\nYour previous reply was not a valid JSON object. Respond with the JSON object only."
            );
            let second = judge.generate(&LlmRequest::new(retry_prompt))?;
            parse_judge_reply(&second).map_err(EvalError::JudgeFormat)
        }
    }
}

fn parse_judge_reply(reply: &str) -> Result<QualityScore, String> {
    let start = reply.find('{').ok_or_else(|| "no JSON object".to_string())?;
    let end = reply.rfind('}').ok_or_else(|| "no JSON object".to_string())?;
    if end <= start {
        return Err("no JSON object".into());
    }
    let parsed: JudgeReply =
        serde_json::from_str(&reply[start..=end]).map_err(|e| e.to_string())?;
    let clamp = |x: f64| x.clamp(0.0, 5.0);
    Ok(QualityScore {
        coherence: clamp(parsed.coherence_score),
        fluency: clamp(parsed.fluency_score),
        diversity: clamp(parsed.diversity_score),
    })
}

/// Clean-vs-attacked detectability for one set of watermarked sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub clean: RocResult,
    pub attacked: RocResult,
}

/// Paraphrases every watermarked sentence with its accumulated context,
/// scores clean and attacked paragraphs plus the user-supplied negatives
/// through the detector, and returns both ROCs.
pub fn run_attack(
    sessions: &[InjectionSession],
    negatives: &[Vec<String>],
    attacker: &dyn Paraphraser,
    bank: &TemplateBank,
    parser: &dyn AmrParser,
    detect_cfg: &DetectConfig,
    match_cfg: &MatchConfig,
) -> Result<AttackOutcome, EvalError> {
    if sessions.is_empty() || negatives.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let neg_z: Vec<f64> = negatives
        .iter()
        .map(|p| Ok(score_document(p, bank, detect_cfg, parser, match_cfg)?.z))
        .collect::<Result<_, EvalError>>()?;

    let mut clean_z = Vec::with_capacity(sessions.len());
    let mut attacked_z = Vec::with_capacity(sessions.len());
    for session in sessions {
        let sentences: Vec<String> =
            session.accepted.iter().map(|a| a.sentence.clone()).collect();
        clean_z.push(score_document(&sentences, bank, detect_cfg, parser, match_cfg)?.z);

        let mut context = vec![session.s0.clone()];
        let mut paraphrased = Vec::with_capacity(sentences.len());
        for sentence in &sentences {
            paraphrased.push(attacker.paraphrase(sentence, &context)?);
            context.push(sentence.clone());
        }
        attacked_z.push(score_document(&paraphrased, bank, detect_cfg, parser, match_cfg)?.z);
    }
    Ok(AttackOutcome {
        clean: roc(&clean_z, &neg_z)?,
        attacked: roc(&attacked_z, &neg_z)?,
    })
}

/// Rebuilds the bank at each size (fixed seed) and scores fixed positive
/// and negative paragraphs through detection, returning one ROC per size.
#[allow(clippy::too_many_arguments)]
pub fn bank_size_sweep(
    corpus: &[AmrGraph],
    sizes: &[usize],
    base: &BankParams,
    positives: &[Vec<String>],
    negatives: &[Vec<String>],
    parser: &dyn AmrParser,
    detect_cfg: &DetectConfig,
    match_cfg: &MatchConfig,
) -> Result<BTreeMap<usize, RocResult>, EvalError> {
    if sizes.is_empty() || positives.is_empty() || negatives.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut out = BTreeMap::new();
    for &size in sizes {
        let params = BankParams {
            bank_size: size,
            ..base.clone()
        };
        let bank = build_bank(corpus.iter().cloned(), &params)?;
        let score_all = |paragraphs: &[Vec<String>]| -> Result<Vec<f64>, EvalError> {
            paragraphs
                .iter()
                .map(|p| Ok(score_document(p, &bank, detect_cfg, parser, match_cfg)?.z))
                .collect()
        };
        let pos = score_all(positives)?;
        let neg = score_all(negatives)?;
        out.insert(size, roc(&pos, &neg)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clients::ScriptedLlm;

    #[test]
    fn perfect_separation_gives_auc_one() {
        let r = roc(&[2.0, 3.0], &[0.0, 1.0]).unwrap();
        assert_eq!(r.auc, 1.0);
        assert_eq!(r.tpr_at[0].tpr, 1.0);
        assert_eq!(r.tpr_at[1].tpr, 1.0);
    }

    #[test]
    fn identical_distributions_give_half() {
        let r = roc(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.auc, 0.5);
    }

    #[test]
    fn ties_earn_half_credit() {
        // pairs: (1,2) lose, (2,2) tie, (3,2) win -> (1 + 0.5) / 3
        let r = roc(&[1.0, 2.0, 3.0], &[2.0]).unwrap();
        assert!((r.auc - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(roc(&[], &[1.0]), Err(EvalError::EmptyInput)));
        assert!(matches!(roc(&[1.0], &[]), Err(EvalError::EmptyInput)));
    }

    #[test]
    fn auc_matches_pair_enumeration_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let np = rng.gen_range(1..30);
            let nn = rng.gen_range(1..30);
            // Coarse grid forces plenty of ties.
            let pos: Vec<f64> = (0..np).map(|_| rng.gen_range(0..10) as f64 / 2.0).collect();
            let neg: Vec<f64> = (0..nn).map(|_| rng.gen_range(0..10) as f64 / 2.0).collect();
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
            assert!((fast - brute).abs() < 1e-12, "fast={fast} brute={brute}");
        }
    }

    #[test]
    fn roc_is_invariant_under_monotone_transforms() {
        let pos = [0.1, 0.4, 0.4, 0.9];
        let neg = [0.0, 0.2, 0.4];
        let base = roc(&pos, &neg).unwrap();
        let f = |x: f64| (x * 3.0).exp() + 1.0;
        let tp: Vec<f64> = pos.iter().map(|&x| f(x)).collect();
        let tn: Vec<f64> = neg.iter().map(|&x| f(x)).collect();
        let transformed = roc(&tp, &tn).unwrap();
        assert!((base.auc - transformed.auc).abs() < 1e-12);
        for (a, b) in base.tpr_at.iter().zip(&transformed.tpr_at) {
            assert_eq!(a.tpr, b.tpr);
        }
    }

    #[test]
    fn simulation_separates_when_rates_differ() {
        let r = simulate_detection(200, 5, 1.0, 0.0, 0.05, 7).unwrap();
        assert_eq!(r.auc, 1.0);
        let r = simulate_detection(1000, 5, 0.3, 0.3, 0.05, 7).unwrap();
        assert!((r.auc - 0.5).abs() < 0.05, "auc = {}", r.auc);
    }

    #[test]
    fn simulation_is_seed_deterministic() {
        let a = simulate_detection(50, 5, 0.9, 0.05, 0.05, 3).unwrap();
        let b = simulate_detection(50, 5, 0.9, 0.05, 0.05, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn simulation_converges_to_closed_form_binomial_auc() {
        // Closed form for Binomial(5, 0.6) vs Binomial(5, 0.2): z is
        // strictly increasing in the hit count, so comparing counts is
        // comparing z-scores.
        let pmf = |p: f64| -> Vec<f64> {
            let n = 5usize;
            let mut coeff = 1.0;
            (0..=n)
                .map(|k| {
                    if k > 0 {
                        coeff *= (n - k + 1) as f64 / k as f64;
                    }
                    coeff * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
                })
                .collect()
        };
        let (pos, neg) = (pmf(0.6), pmf(0.2));
        let mut closed = 0.0;
        for (kp, wp) in pos.iter().enumerate() {
            for (kn, wn) in neg.iter().enumerate() {
                closed += wp
                    * wn
                    * if kp > kn {
                        1.0
                    } else if kp == kn {
                        0.5
                    } else {
                        0.0
                    };
            }
        }
        for seed in 0..10 {
            let sim = simulate_detection(10_000, 5, 0.6, 0.2, 0.05, seed).unwrap();
            assert!(
                (sim.auc - closed).abs() <= 0.01,
                "seed {seed}: simulated {} vs closed form {closed}",
                sim.auc
            );
        }
    }

    #[test]
    fn simulation_rejects_bad_probabilities() {
        assert!(matches!(
            simulate_detection(10, 5, 1.5, 0.0, 0.05, 0),
            Err(EvalError::InvalidProbability(_))
        ));
    }

    fn session_with_trials(trials: &[usize]) -> InjectionSession {
        InjectionSession {
            s0: "s0".into(),
            context: "s0".into(),
            accepted: trials
                .iter()
                .map(|&t| crate::injector::AcceptedSentence {
                    sentence: "x".into(),
                    template_id: 0,
                    trials_used: t,
                    score: 1.0,
                    fallback: false,
                })
                .collect(),
            trial_log: Vec::new(),
        }
    }

    #[test]
    fn histogram_buckets_and_mean() {
        let sessions = vec![session_with_trials(&[1; 10]), session_with_trials(&[50; 10])];
        let h = trial_histogram(&sessions).unwrap();
        assert_eq!(h.mean, 25.5);
        assert_eq!(h.total_sentences, 20);
        assert_eq!(h.buckets.len(), 10);
        assert_eq!(h.buckets[0], TrialBucket { lo: 1, hi: 5, count: 10 });
        assert_eq!(h.buckets[9], TrialBucket { lo: 46, hi: 50, count: 10 });
        assert!(h.buckets[1..9].iter().all(|b| b.count == 0));
    }

    #[test]
    fn histogram_of_all_ones() {
        let h = trial_histogram(&[session_with_trials(&[1, 1, 1])]).unwrap();
        assert_eq!(h.mean, 1.0);
        assert_eq!(h.buckets[0].count, 3);
    }

    #[test]
    fn judge_parses_strict_json() {
        let prompt = render_quality_prompt("Nice paragraph.");
        let judge = ScriptedLlm::new().with_reply(
            &prompt,
            r#"{"coherence_score":4.0,"fluency_score":4.0,"diversity_score":3.0}"#,
        );
        let q = judge_quality("Nice paragraph.", &judge).unwrap();
        assert_eq!(
            q,
            QualityScore {
                coherence: 4.0,
                fluency: 4.0,
                diversity: 3.0
            }
        );
    }

    #[test]
    fn judge_clamps_out_of_range_scores() {
        let prompt = render_quality_prompt("P.");
        let judge = ScriptedLlm::new().with_reply(
            &prompt,
            r#"{"coherence_score":9.0,"fluency_score":-1.0,"diversity_score":2.5}"#,
        );
        let q = judge_quality("P.", &judge).unwrap();
        assert_eq!((q.coherence, q.fluency, q.diversity), (5.0, 0.0, 2.5));
    }

    #[test]
    fn judge_reasks_once_then_errors() {
        let prompt = render_quality_prompt("P.");
        let retry = format!(
            "{prompt}\n\nYour previous reply was not a valid JSON object. Respond with the JSON object only."
        );
        // Malformed twice -> JudgeFormat error.
        let judge = ScriptedLlm::new()
            .with_reply(&prompt, "not json")
            .with_reply(&retry, "still not json");
        assert!(matches!(
            judge_quality("P.", &judge),
            Err(EvalError::JudgeFormat(_))
        ));
        // Malformed once, valid on re-ask -> success.
        let judge = ScriptedLlm::new()
            .with_reply(&prompt, "not json")
            .with_reply(
                &retry,
                r#"{"coherence_score":1.0,"fluency_score":2.0,"diversity_score":3.0}"#,
            );
        assert!(judge_quality("P.", &judge).is_ok());
    }

    #[test]
    fn judge_rejects_extra_keys() {
        let prompt = render_quality_prompt("P.");
        let retry = format!(
            "{prompt}\n\nYour previous reply was not a valid JSON object. Respond with the JSON object only."
        );
        let bad = r#"{"coherence_score":1.0,"fluency_score":2.0,"diversity_score":3.0,"extra":0}"#;
        let judge = ScriptedLlm::new()
            .with_reply(&prompt, bad)
            .with_reply(&retry, bad);
        assert!(matches!(
            judge_quality("P.", &judge),
            Err(EvalError::JudgeFormat(_))
        ));
    }

    #[test]
    fn quality_prompt_contains_rubric_lines() {
        let p = render_quality_prompt("Some text.");
        assert!(p.starts_with("You are an expert writing quality evaluator."));
        assert!(p.contains("Respond with a **valid JSON object only**"));
        assert!(p.contains("\"coherence_score\":  float"));
        assert!(p.ends_with("GENERATED PARAGRAPH:\nSome text."));
    }
}
