//! Pluggable interfaces to the three external neural services (generation
//! LLM, AMR parser, paraphraser/judge LLM), plus deterministic in-process
//! stubs so every other module is testable offline.

mod http;
mod stubs;

pub use http::{HttpAmrParser, HttpConfig, LlmParaphraser, OpenAiChatClient, RetryPolicy};
pub use stubs::{
    EchoTemplateLlm, EmbeddedPenmanParser, IdentityParaphraser, ScriptedLlm, ScriptedParaphraser,
    ScriptedParser, SequenceLlm,
};

use thiserror::Error;

use crate::amr::AmrGraph;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("transport error (status {status}): {body}")]
    Transport { status: u16, body: String },
    #[error("request timed out")]
    Timeout,
    #[error("rate limited (retry after {retry_after_secs:?}s)")]
    RateLimited { retry_after_secs: Option<u64> },
    #[error("AMR parser unavailable: {0}")]
    ParserUnavailable(String),
    #[error("no AMR graph for input: {0}")]
    Unparseable(String),
    #[error("stub has no scripted reply for: {0}")]
    ScriptMiss(String),
}

/// One LLM completion request.
#[derive(Debug, Clone, PartialEq)]
pub struct LlmRequest {
    pub prompt: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    pub seed: Option<u64>,
}

impl LlmRequest {
    /// Request with the default sampling parameters (temperature 0.6,
    /// top_p 0.9).
    pub fn new(prompt: impl Into<String>) -> Self {
        LlmRequest {
            prompt: prompt.into(),
            temperature: 0.6,
            top_p: 0.9,
            max_tokens: 512,
            seed: None,
        }
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        if self.prompt.is_empty() {
            return Err(ClientError::InvalidRequest("prompt must be nonempty".into()));
        }
        if self.temperature < 0.0 {
            return Err(ClientError::InvalidRequest(
                "temperature must be >= 0".into(),
            ));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(ClientError::InvalidRequest(
                "top_p must be in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Parse result: the graph plus the raw Penman text it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ParserResult {
    pub graph: AmrGraph,
    pub raw: String,
}

/// Text generation service.
pub trait LlmClient: Send + Sync {
    /// Returns the completion text, stripped of surrounding whitespace.
    fn generate(&self, req: &LlmRequest) -> Result<String, ClientError>;
}

/// Sentence-to-AMR parsing service.
pub trait AmrParser: Send + Sync {
    fn parse_sentence(&self, text: &str) -> Result<ParserResult, ClientError>;
}

/// Sentence rewriting service.
pub trait Paraphraser: Send + Sync {
    /// Rewrites `text` given the preceding context sentences.
    fn paraphrase(&self, text: &str, context: &[String]) -> Result<String, ClientError>;
}

/// Renders the paraphrase prompt: previous context joined by spaces, the
/// sentence to rewrite, and the instruction to return only the new
/// sentence.
pub fn render_paraphrase_prompt(sentence: &str, context: &[String]) -> String {
    format!(
        "Previous context: {}\n\
         Current sentence to paraphrase: {}\n\
         Rewrite the sentence above while preserving its meaning.\n\
         Do not provide any explanation or extra commentary.\n\
         Return only the new sentence.",
        context.join(" "),
        sentence
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_defaults_match_generation_setup() {
        let r = LlmRequest::new("hello");
        assert_eq!(r.temperature, 0.6);
        assert_eq!(r.top_p, 0.9);
        assert!(r.validate().is_ok());
    }

    #[test]
    fn empty_prompt_is_invalid() {
        assert!(matches!(
            LlmRequest::new("").validate(),
            Err(ClientError::InvalidRequest(_))
        ));
    }

    #[test]
    fn out_of_range_sampling_params_are_invalid() {
        let mut r = LlmRequest::new("x");
        r.top_p = 0.0;
        assert!(r.validate().is_err());
        let mut r = LlmRequest::new("x");
        r.temperature = -0.1;
        assert!(r.validate().is_err());
    }

    #[test]
    fn paraphrase_prompt_renders_context_and_sentence() {
        let p = render_paraphrase_prompt("S", &["A".into(), "B".into()]);
        assert!(p.contains("Previous context: A B"));
        assert!(p.contains("Current sentence to paraphrase: S"));
        assert!(p.ends_with("Return only the new sentence."));
    }
}
