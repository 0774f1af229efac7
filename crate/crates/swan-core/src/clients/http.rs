//! HTTP client implementations: an OpenAI-compatible chat-completions
//! client for generation/paraphrase/judging, and a minimal JSON protocol
//! (`POST /parse {"sentences":[...]} -> {"penman":[...]}`) for the AMR
//! parser, so a thin sidecar around any neural parser can serve it.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::Deserialize;

use crate::amr::parse_penman;

use super::{
    render_paraphrase_prompt, AmrParser, ClientError, LlmClient, LlmRequest, Paraphraser,
    ParserResult,
};

/// Retry behavior for transient failures: exponential backoff on transport
/// errors and timeouts; 429 honors Retry-After when present.
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay_ms: 200,
            max_delay_ms: 5_000,
        }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        let ms = self
            .base_delay_ms
            .saturating_mul(1u64 << attempt.min(16))
            .min(self.max_delay_ms);
        Duration::from_millis(ms)
    }
}

/// Connection settings shared by the HTTP clients.
#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub model: Option<String>,
    pub timeout_secs: u64,
    pub retry: RetryPolicy,
    /// Maximum concurrent in-flight requests through this client.
    pub in_flight_limit: usize,
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        HttpConfig {
            endpoint: endpoint.into(),
            api_key: None,
            model: None,
            timeout_secs: 120,
            retry: RetryPolicy::default(),
            in_flight_limit: 4,
        }
    }
}

/// Counting semaphore bounding concurrent requests.
struct Gate {
    slots: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn new(limit: usize) -> Self {
        Gate {
            slots: Mutex::new(limit.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> GateGuard<'_> {
        let mut slots = self.slots.lock().expect("lock poisoned");
        while *slots == 0 {
            slots = self.cv.wait(slots).expect("lock poisoned");
        }
        *slots -= 1;
        GateGuard { gate: self }
    }
}

struct GateGuard<'a> {
    gate: &'a Gate,
}

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        let mut slots = self.gate.slots.lock().expect("lock poisoned");
        *slots += 1;
        self.gate.cv.notify_one();
    }
}

fn agent(timeout_secs: u64) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(timeout_secs)))
        .http_status_as_error(false)
        .build()
        .into()
}

fn classify(err: ureq::Error) -> ClientError {
    match err {
        ureq::Error::Timeout(_) => ClientError::Timeout,
        ureq::Error::Io(e) if e.kind() == std::io::ErrorKind::TimedOut => ClientError::Timeout,
        other => ClientError::Transport {
            status: 0,
            body: other.to_string(),
        },
    }
}

fn should_retry(err: &ClientError) -> bool {
    matches!(
        err,
        ClientError::Timeout
            | ClientError::RateLimited { .. }
            | ClientError::Transport { status: 0, .. }
            | ClientError::Transport { status: 500..=599, .. }
    )
}

/// Posts JSON and decodes the 2xx response body, translating failures into
/// [`ClientError`] with retries applied.
fn post_json<T: for<'de> Deserialize<'de>>(
    agent: &ureq::Agent,
    url: &str,
    api_key: Option<&str>,
    body: &serde_json::Value,
    retry: &RetryPolicy,
) -> Result<T, ClientError> {
    let mut attempt = 0u32;
    loop {
        let result = send_once(agent, url, api_key, body);
        match result {
            Ok(value) => return Ok(value),
            Err(err) if should_retry(&err) && attempt < retry.max_retries => {
                let delay = match &err {
                    ClientError::RateLimited {
                        retry_after_secs: Some(secs),
                    } => Duration::from_secs((*secs).min(60)),
                    _ => retry.delay(attempt),
                };
                std::thread::sleep(delay);
                attempt += 1;
            }
            Err(err) => return Err(err),
        }
    }
}

fn send_once<T: for<'de> Deserialize<'de>>(
    agent: &ureq::Agent,
    url: &str,
    api_key: Option<&str>,
    body: &serde_json::Value,
) -> Result<T, ClientError> {
    let mut req = agent.post(url);
    if let Some(key) = api_key {
        req = req.header("Authorization", &format!("Bearer {key}"));
    }
    let mut res = req.send_json(body).map_err(classify)?;
    let status = res.status().as_u16();
    if status == 429 {
        let retry_after_secs = res
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.parse().ok());
        return Err(ClientError::RateLimited { retry_after_secs });
    }
    let text = res
        .body_mut()
        .read_to_string()
        .map_err(|e| ClientError::Transport {
            status,
            body: e.to_string(),
        })?;
    if !(200..300).contains(&status) {
        return Err(ClientError::Transport { status, body: text });
    }
    serde_json::from_str(&text).map_err(|e| ClientError::Transport {
        status,
        body: format!("malformed response: {e}"),
    })
}

// --- OpenAI-compatible chat completions ---

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Debug, Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Debug, Deserialize)]
struct ChatMessage {
    content: String,
}

/// Client for any OpenAI-compatible `/v1/chat/completions` endpoint.
pub struct OpenAiChatClient {
    agent: ureq::Agent,
    cfg: HttpConfig,
    url: String,
    gate: Gate,
}

impl OpenAiChatClient {
    pub fn new(cfg: HttpConfig) -> Self {
        let base = cfg.endpoint.trim_end_matches('/');
        let url = if base.contains("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/v1/chat/completions")
        };
        OpenAiChatClient {
            agent: agent(cfg.timeout_secs),
            gate: Gate::new(cfg.in_flight_limit),
            url,
            cfg,
        }
    }
}

impl LlmClient for OpenAiChatClient {
    fn generate(&self, req: &LlmRequest) -> Result<String, ClientError> {
        req.validate()?;
        let _slot = self.gate.acquire();
        let mut body = serde_json::json!({
            "model": self.cfg.model.as_deref().unwrap_or("default"),
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": req.temperature,
            "top_p": req.top_p,
            "max_tokens": req.max_tokens,
        });
        if let Some(seed) = req.seed {
            body["seed"] = serde_json::json!(seed);
        }
        let res: ChatResponse = post_json(
            &self.agent,
            &self.url,
            self.cfg.api_key.as_deref(),
            &body,
            &self.cfg.retry,
        )?;
        let content = res
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or(ClientError::Transport {
                status: 200,
                body: "response has no choices".into(),
            })?;
        Ok(content.trim().to_string())
    }
}

// --- AMR parser sidecar protocol ---

#[derive(Debug, Deserialize)]
struct ParseResponse {
    penman: Vec<String>,
}

/// Client for the parser sidecar protocol.
pub struct HttpAmrParser {
    agent: ureq::Agent,
    cfg: HttpConfig,
    url: String,
    gate: Gate,
}

impl HttpAmrParser {
    pub fn new(cfg: HttpConfig) -> Self {
        let base = cfg.endpoint.trim_end_matches('/');
        let url = if base.ends_with("/parse") {
            base.to_string()
        } else {
            format!("{base}/parse")
        };
        HttpAmrParser {
            agent: agent(cfg.timeout_secs),
            gate: Gate::new(cfg.in_flight_limit),
            url,
            cfg,
        }
    }
}

impl AmrParser for HttpAmrParser {
    fn parse_sentence(&self, text: &str) -> Result<ParserResult, ClientError> {
        if text.is_empty() {
            return Err(ClientError::InvalidRequest("text must be nonempty".into()));
        }
        let _slot = self.gate.acquire();
        let body = serde_json::json!({ "sentences": [text] });
        let res: ParseResponse = post_json(
            &self.agent,
            &self.url,
            self.cfg.api_key.as_deref(),
            &body,
            &self.cfg.retry,
        )
        .map_err(|e| match e {
            ClientError::Transport { status: 0, body } => ClientError::ParserUnavailable(body),
            other => other,
        })?;
        let raw = res
            .penman
            .into_iter()
            .next()
            .filter(|p| !p.trim().is_empty())
            .ok_or_else(|| ClientError::Unparseable(text.to_string()))?;
        let graph = parse_penman(&raw).map_err(|_| ClientError::Unparseable(text.to_string()))?;
        Ok(ParserResult { graph, raw })
    }
}

/// Paraphraser backed by any LLM client, prompting per the paraphrase
/// template.
pub struct LlmParaphraser<C> {
    llm: C,
}

impl<C: LlmClient> LlmParaphraser<C> {
    pub fn new(llm: C) -> Self {
        LlmParaphraser { llm }
    }
}

impl<C: LlmClient> Paraphraser for LlmParaphraser<C> {
    fn paraphrase(&self, text: &str, context: &[String]) -> Result<String, ClientError> {
        if text.is_empty() {
            return Err(ClientError::InvalidRequest("text must be nonempty".into()));
        }
        let req = LlmRequest::new(render_paraphrase_prompt(text, context));
        self.llm.generate(&req)
    }
}
