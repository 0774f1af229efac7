//! Watermark detection: parse each sentence of a paragraph, score it
//! against the template bank, flag sentences whose best match clears the
//! detection threshold, and decide with a one-proportion z-test over the
//! green count.

mod segment;

pub use segment::segment_sentences;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bank::{abstract_template_with, AbstractionRules, TemplateBank};
use crate::clients::{AmrParser, ClientError};
use crate::matcher::{best_bank_score, MatchConfig, MatchError};

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("paragraph contains no sentences")]
    EmptyParagraph,
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Match(#[from] MatchError),
}

/// Detection thresholds. `lambda` is the expected hit rate of
/// non-watermarked text under the null hypothesis; `z_threshold` 1.645 is
/// the one-sided 5% critical value.
#[derive(Debug, Clone)]
pub struct DetectConfig {
    pub theta_detect: f64,
    pub lambda: f64,
    pub z_threshold: f64,
    /// Abstract parsed graphs with the NE/N/X rules before bank scoring so
    /// concrete sentences compare placeholder-to-placeholder.
    pub abstract_before_match: bool,
    pub rules: AbstractionRules,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            theta_detect: 0.7,
            lambda: 0.05,
            z_threshold: 1.645,
            abstract_before_match: true,
            rules: AbstractionRules::default(),
        }
    }
}

impl DetectConfig {
    fn validate(&self) -> Result<(), DetectError> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(DetectError::Domain(format!(
                "lambda must be in (0,1), got {}",
                self.lambda
            )));
        }
        if !(self.theta_detect > 0.0 && self.theta_detect <= 1.0) {
            return Err(DetectError::Domain(format!(
                "theta_detect must be in (0,1], got {}",
                self.theta_detect
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Watermarked,
    NotWatermarked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceReport {
    pub sentence: String,
    pub best_score: f64,
    pub best_template_id: Option<u32>,
    pub flagged: bool,
}

/// Paragraph-level detection outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub per_sentence: Vec<SentenceReport>,
    /// Green count: sentences whose best score cleared the threshold.
    pub k: usize,
    pub n: usize,
    pub green_frac: f64,
    pub z: f64,
    pub decision: Decision,
}

/// One-proportion z statistic for observing `k` hits in `n` trials under
/// null rate `lambda`: `(k - lambda*n) / sqrt(n*lambda*(1-lambda))`.
///
/// Evaluated as `(k/n - lambda) * sqrt(n / (lambda*(1-lambda)))`, which is
/// algebraically identical and returns exactly 0.0 whenever `k/n` equals
/// `lambda` as written (e.g. k=1, n=10, lambda=0.1).
pub fn z_score(k: usize, n: usize, lambda: f64) -> Result<f64, DetectError> {
    if n < 1 {
        return Err(DetectError::Domain("n must be >= 1".into()));
    }
    if k > n {
        return Err(DetectError::Domain(format!("k={k} exceeds n={n}")));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(DetectError::Domain(format!(
            "lambda must be in (0,1), got {lambda}"
        )));
    }
    let n_f = n as f64;
    let frac = k as f64 / n_f;
    Ok((frac - lambda) * (n_f / (lambda * (1.0 - lambda))).sqrt())
}

/// Segments `paragraph` into sentences and runs [`score_document`].
pub fn detect(
    paragraph: &str,
    bank: &TemplateBank,
    cfg: &DetectConfig,
    parser: &dyn AmrParser,
    match_cfg: &MatchConfig,
) -> Result<DetectionReport, DetectError> {
    let sentences = segment_sentences(paragraph);
    if sentences.is_empty() {
        return Err(DetectError::EmptyParagraph);
    }
    score_document(&sentences, bank, cfg, parser, match_cfg)
}

/// Scores pre-segmented sentences. Unparseable sentences score 0 and stay
/// unflagged but still count toward `n`; other client failures propagate.
/// Sentences are processed in parallel and reassembled by position, so the
/// report is deterministic.
pub fn score_document(
    sentences: &[String],
    bank: &TemplateBank,
    cfg: &DetectConfig,
    parser: &dyn AmrParser,
    match_cfg: &MatchConfig,
) -> Result<DetectionReport, DetectError> {
    cfg.validate()?;
    if sentences.is_empty() {
        return Err(DetectError::EmptyParagraph);
    }
    if bank.is_empty() {
        return Err(DetectError::Match(MatchError::EmptyBank));
    }
    let per_sentence: Vec<SentenceReport> = sentences
        .par_iter()
        .map(|sentence| score_sentence(sentence, bank, cfg, parser, match_cfg))
        .collect::<Result<_, _>>()?;

    let k = per_sentence.iter().filter(|s| s.flagged).count();
    let n = per_sentence.len();
    let z = z_score(k, n, cfg.lambda)?;
    Ok(DetectionReport {
        per_sentence,
        k,
        n,
        green_frac: k as f64 / n as f64,
        z,
        decision: if z >= cfg.z_threshold {
            Decision::Watermarked
        } else {
            Decision::NotWatermarked
        },
    })
}

fn score_sentence(
    sentence: &str,
    bank: &TemplateBank,
    cfg: &DetectConfig,
    parser: &dyn AmrParser,
    match_cfg: &MatchConfig,
) -> Result<SentenceReport, DetectError> {
    let parsed = match parser.parse_sentence(sentence) {
        Ok(r) => r.graph,
        Err(ClientError::Unparseable(_)) => {
            return Ok(SentenceReport {
                sentence: sentence.to_string(),
                best_score: 0.0,
                best_template_id: None,
                flagged: false,
            })
        }
        Err(other) => return Err(other.into()),
    };
    let scored = if cfg.abstract_before_match {
        abstract_template_with(&parsed, &cfg.rules)
    } else {
        parsed
    };
    let (best_score, best_template_id) = best_bank_score(&scored, bank, match_cfg)?;
    Ok(SentenceReport {
        sentence: sentence.to_string(),
        best_score,
        best_template_id: Some(best_template_id),
        flagged: best_score >= cfg.theta_detect,
    })
}

/// Empirical flag rate of a non-watermarked corpus against the bank; the
/// calibrated null rate for [`DetectConfig::lambda`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    pub lambda_hat: f64,
    pub flagged: usize,
    pub total: usize,
}

/// Estimates the null hit rate by scoring user-supplied non-watermarked
/// sentences against the bank with the configured detection threshold.
pub fn estimate_lambda(
    sentences: &[String],
    bank: &TemplateBank,
    cfg: &DetectConfig,
    parser: &dyn AmrParser,
    match_cfg: &MatchConfig,
) -> Result<LambdaEstimate, DetectError> {
    cfg.validate()?;
    if sentences.is_empty() {
        return Err(DetectError::EmptyParagraph);
    }
    let reports: Vec<SentenceReport> = sentences
        .par_iter()
        .map(|s| score_sentence(s, bank, cfg, parser, match_cfg))
        .collect::<Result<_, _>>()?;
    let flagged = reports.iter().filter(|r| r.flagged).count();
    Ok(LambdaEstimate {
        lambda_hat: flagged as f64 / reports.len() as f64,
        flagged,
        total: reports.len(),
    })
}
