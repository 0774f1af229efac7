//! Deterministic in-process stand-ins for the external services. Stubs are
//! pure given their script tables, so end-to-end runs are byte-reproducible.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::amr::parse_penman;

use super::{AmrParser, ClientError, LlmClient, LlmRequest, Paraphraser, ParserResult};

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x1_0000_01b3);
    }
    h
}

/// LLM stub keyed by prompt hash.
#[derive(Debug, Default)]
pub struct ScriptedLlm {
    replies: HashMap<u64, String>,
}

impl ScriptedLlm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_reply(mut self, prompt: &str, reply: &str) -> Self {
        self.replies.insert(fnv1a64(prompt.as_bytes()), reply.to_string());
        self
    }
}

impl LlmClient for ScriptedLlm {
    fn generate(&self, req: &LlmRequest) -> Result<String, ClientError> {
        req.validate()?;
        match self.replies.get(&fnv1a64(req.prompt.as_bytes())) {
            Some(reply) => Ok(reply.trim().to_string()),
            None => Err(ClientError::ScriptMiss(truncate(&req.prompt))),
        }
    }
}

/// LLM stub that replays a fixed sequence of replies regardless of prompt,
/// cycling when exhausted.
#[derive(Debug)]
pub struct SequenceLlm {
    replies: Vec<String>,
    next: Mutex<usize>,
}

impl SequenceLlm {
    pub fn new(replies: Vec<String>) -> Self {
        SequenceLlm {
            replies,
            next: Mutex::new(0),
        }
    }
}

impl LlmClient for SequenceLlm {
    fn generate(&self, req: &LlmRequest) -> Result<String, ClientError> {
        req.validate()?;
        if self.replies.is_empty() {
            return Err(ClientError::ScriptMiss("sequence exhausted".into()));
        }
        let mut next = self.next.lock().expect("lock poisoned");
        let reply = self.replies[*next % self.replies.len()].clone();
        *next += 1;
        Ok(reply.trim().to_string())
    }
}

/// Perfect-generator stub: extracts the Penman template embedded in the
/// generation prompt (the block between `AMR:` and `Context:`) and emits a
/// sentence that carries it verbatim, so [`EmbeddedPenmanParser`] parses
/// the candidate back to exactly the drawn template.
#[derive(Debug, Default)]
pub struct EchoTemplateLlm;

impl LlmClient for EchoTemplateLlm {
    fn generate(&self, req: &LlmRequest) -> Result<String, ClientError> {
        req.validate()?;
        let after = req
            .prompt
            .rsplit_once("AMR:\n")
            .map(|(_, rest)| rest)
            .ok_or_else(|| ClientError::ScriptMiss("prompt has no AMR block".into()))?;
        let template = after
            .split("\nContext:")
            .next()
            .unwrap_or(after)
            .trim()
            .to_string();
        Ok(format!("A stub sentence realizing {template}"))
    }
}

/// Parser stub that extracts the first balanced parenthesized block from
/// the sentence and parses it as Penman.
#[derive(Debug, Default)]
pub struct EmbeddedPenmanParser;

/// Returns the first balanced `(...)` block in `text`, quotes respected.
pub(crate) fn extract_penman_payload(text: &str) -> Option<&str> {
    let start = text.find('(')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in text[start..].char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..start + i + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

impl AmrParser for EmbeddedPenmanParser {
    fn parse_sentence(&self, text: &str) -> Result<ParserResult, ClientError> {
        if text.is_empty() {
            return Err(ClientError::InvalidRequest("text must be nonempty".into()));
        }
        let payload = extract_penman_payload(text)
            .ok_or_else(|| ClientError::Unparseable(text.to_string()))?;
        let graph =
            parse_penman(payload).map_err(|_| ClientError::Unparseable(text.to_string()))?;
        Ok(ParserResult {
            graph,
            raw: payload.to_string(),
        })
    }
}

/// Parser stub driven by a sentence-to-Penman table. In strict mode an
/// unknown sentence is `Unparseable`; otherwise it falls back to embedded
/// payload extraction.
#[derive(Debug, Default)]
pub struct ScriptedParser {
    table: HashMap<String, String>,
    strict: bool,
}

impl ScriptedParser {
    pub fn new(strict: bool) -> Self {
        ScriptedParser {
            table: HashMap::new(),
            strict,
        }
    }

    pub fn with_entry(mut self, sentence: &str, penman: &str) -> Self {
        self.table.insert(sentence.trim().to_string(), penman.to_string());
        self
    }

    pub fn from_table(table: HashMap<String, String>, strict: bool) -> Self {
        ScriptedParser { table, strict }
    }
}

impl AmrParser for ScriptedParser {
    fn parse_sentence(&self, text: &str) -> Result<ParserResult, ClientError> {
        if text.is_empty() {
            return Err(ClientError::InvalidRequest("text must be nonempty".into()));
        }
        if let Some(raw) = self.table.get(text.trim()) {
            let graph = parse_penman(raw).map_err(|e| {
                ClientError::ParserUnavailable(format!("bad scripted penman: {e}"))
            })?;
            return Ok(ParserResult {
                graph,
                raw: raw.clone(),
            });
        }
        if self.strict {
            return Err(ClientError::Unparseable(text.to_string()));
        }
        EmbeddedPenmanParser.parse_sentence(text)
    }
}

/// Paraphraser stub that returns the input unchanged.
#[derive(Debug, Default)]
pub struct IdentityParaphraser;

impl Paraphraser for IdentityParaphraser {
    fn paraphrase(&self, text: &str, _context: &[String]) -> Result<String, ClientError> {
        if text.is_empty() {
            return Err(ClientError::InvalidRequest("text must be nonempty".into()));
        }
        Ok(text.to_string())
    }
}

/// Table-driven paraphraser stub; unknown sentences pass through unchanged
/// unless strict.
#[derive(Debug, Default)]
pub struct ScriptedParaphraser {
    table: HashMap<String, String>,
    strict: bool,
}

impl ScriptedParaphraser {
    pub fn new(strict: bool) -> Self {
        ScriptedParaphraser {
            table: HashMap::new(),
            strict,
        }
    }

    pub fn with_entry(mut self, from: &str, to: &str) -> Self {
        self.table.insert(from.trim().to_string(), to.to_string());
        self
    }
}

impl Paraphraser for ScriptedParaphraser {
    fn paraphrase(&self, text: &str, _context: &[String]) -> Result<String, ClientError> {
        if text.is_empty() {
            return Err(ClientError::InvalidRequest("text must be nonempty".into()));
        }
        match self.table.get(text.trim()) {
            Some(out) => Ok(out.clone()),
            None if self.strict => Err(ClientError::ScriptMiss(truncate(text))),
            None => Ok(text.to_string()),
        }
    }
}

fn truncate(s: &str) -> String {
    const LIMIT: usize = 80;
    if s.len() <= LIMIT {
        s.to_string()
    } else {
        let mut end = LIMIT;
        while !s.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}…", &s[..end])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripted_llm_returns_scripted_reply() {
        let llm = ScriptedLlm::new().with_reply("ping", "pong");
        assert_eq!(llm.generate(&LlmRequest::new("ping")).unwrap(), "pong");
        assert!(matches!(
            llm.generate(&LlmRequest::new("other")),
            Err(ClientError::ScriptMiss(_))
        ));
    }

    #[test]
    fn sequence_llm_cycles() {
        let llm = SequenceLlm::new(vec!["a".into(), "b".into()]);
        let req = LlmRequest::new("x");
        assert_eq!(llm.generate(&req).unwrap(), "a");
        assert_eq!(llm.generate(&req).unwrap(), "b");
        assert_eq!(llm.generate(&req).unwrap(), "a");
    }

    #[test]
    fn embedded_parser_extracts_payload() {
        let p = EmbeddedPenmanParser;
        let r = p
            .parse_sentence("A stub sentence realizing (w / want-01 :ARG0 (b / boy))")
            .unwrap();
        assert_eq!(r.graph.concept_node_count(), 2);
        assert_eq!(r.raw, "(w / want-01 :ARG0 (b / boy))");
    }

    #[test]
    fn embedded_parser_ignores_parens_in_strings() {
        let p = EmbeddedPenmanParser;
        let r = p
            .parse_sentence(r#"x (n / name :op1 "open ( paren") y"#)
            .unwrap();
        assert_eq!(r.graph.concept_node_count(), 1);
    }

    #[test]
    fn strict_scripted_parser_rejects_unknown() {
        let p = ScriptedParser::new(true).with_entry("The cat sat.", "(c / cat)");
        assert!(p.parse_sentence("The cat sat.").is_ok());
        assert!(matches!(
            p.parse_sentence("Unknown."),
            Err(ClientError::Unparseable(_))
        ));
    }

    #[test]
    fn echo_template_llm_round_trips_through_embedded_parser() {
        let prompt = "instructions...\nAMR:\n(w / want-01 :ARG0 (n / N))\nContext: none\nPlease output only that one sentence.";
        let llm = EchoTemplateLlm;
        let sentence = llm.generate(&LlmRequest::new(prompt)).unwrap();
        let parsed = EmbeddedPenmanParser.parse_sentence(&sentence).unwrap();
        assert_eq!(parsed.raw, "(w / want-01 :ARG0 (n / N))");
    }

    #[test]
    fn identity_paraphraser_is_identity() {
        let p = IdentityParaphraser;
        assert_eq!(p.paraphrase("hello", &[]).unwrap(), "hello");
    }

    #[test]
    fn scripted_paraphraser_uses_table() {
        let p = ScriptedParaphraser::new(false).with_entry("a", "b");
        assert_eq!(p.paraphrase("a", &[]).unwrap(), "b");
        assert_eq!(p.paraphrase("c", &[]).unwrap(), "c");
    }
}
