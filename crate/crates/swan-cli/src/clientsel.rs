//! Builds parser / LLM / paraphraser clients from resolved configuration:
//! HTTP endpoints for real runs, scripted or embedded stubs for offline
//! and reproducibility work.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use clap::Args;
use swan_core::clients::{
    AmrParser, EchoTemplateLlm, EmbeddedPenmanParser, HttpAmrParser, HttpConfig,
    IdentityParaphraser, LlmClient, LlmParaphraser, OpenAiChatClient, Paraphraser,
    ScriptedParaphraser, ScriptedParser, SequenceLlm,
};

use crate::config::Layers;
use crate::CliError;

/// Connection tuning shared by all HTTP clients.
#[derive(Debug, Args, Clone, Default)]
pub struct HttpFlags {
    /// Maximum concurrent in-flight HTTP requests (key: in-flight-limit, default 4)
    #[arg(long)]
    pub in_flight_limit: Option<usize>,
    /// HTTP request timeout in seconds (key: http-timeout-secs, default 120)
    #[arg(long)]
    pub http_timeout_secs: Option<u64>,
}

/// Parser selection, shared by detect / estimate-lambda / eval / inject.
#[derive(Debug, Args, Clone)]
pub struct ParserFlags {
    /// AMR parser sidecar endpoint (key: parser-endpoint)
    #[arg(long)]
    pub parser_endpoint: Option<String>,
    /// Scripted parser stub: TSV file of sentence<TAB>penman
    #[arg(long, conflicts_with = "parser_endpoint")]
    pub parser_script: Option<PathBuf>,
    /// Stub parser reading a Penman payload embedded in each sentence
    #[arg(long, conflicts_with_all = ["parser_endpoint", "parser_script"])]
    pub parser_embedded: bool,
    /// Treat sentences missing from --parser-script as unparseable
    #[arg(long, requires = "parser_script")]
    pub parser_strict: bool,
}

/// LLM selection, for inject and eval quality.
#[derive(Debug, Args, Clone)]
pub struct LlmFlags {
    /// OpenAI-compatible chat endpoint (key: llm-endpoint)
    #[arg(long)]
    pub llm_endpoint: Option<String>,
    /// API key for the LLM endpoint (key: llm-api-key)
    #[arg(long)]
    pub llm_api_key: Option<String>,
    /// Model name sent to the LLM endpoint (key: llm-model)
    #[arg(long)]
    pub llm_model: Option<String>,
    /// Stub LLM replaying one reply per line from this file, cycling
    #[arg(long, conflicts_with = "llm_endpoint")]
    pub llm_script: Option<PathBuf>,
    /// Stub LLM echoing the prompt's template into its output sentence
    #[arg(long, conflicts_with_all = ["llm_endpoint", "llm_script"])]
    pub llm_echo_template: bool,
}

/// Paraphraser selection for the attack driver.
#[derive(Debug, Args, Clone)]
pub struct ParaphraseFlags {
    /// Identity paraphraser (no-op attack)
    #[arg(long)]
    pub paraphrase_identity: bool,
    /// Scripted paraphraser: TSV file of sentence<TAB>paraphrase
    #[arg(long, conflicts_with = "paraphrase_identity")]
    pub paraphrase_script: Option<PathBuf>,
    /// Paraphrase through the configured LLM endpoint
    #[arg(long, conflicts_with_all = ["paraphrase_identity", "paraphrase_script"])]
    pub paraphrase_llm: bool,
}

fn http_config(
    layers: &Layers,
    endpoint: String,
    api_key: Option<String>,
    model: Option<String>,
    http: &HttpFlags,
) -> Result<HttpConfig, CliError> {
    let mut cfg = HttpConfig::new(endpoint);
    cfg.api_key = layers.resolve_opt("llm-api-key", api_key)?;
    cfg.model = layers.resolve_opt("llm-model", model)?;
    cfg.in_flight_limit = layers.resolve("in-flight-limit", http.in_flight_limit, 4usize)?;
    cfg.timeout_secs = layers.resolve("http-timeout-secs", http.http_timeout_secs, 120u64)?;
    Ok(cfg)
}

fn read_tsv(path: &Path) -> Result<HashMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut table = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('\t').ok_or_else(|| {
            CliError::Usage(format!(
                "{}:{}: expected two tab-separated columns",
                path.display(),
                i + 1
            ))
        })?;
        table.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(table)
}

pub fn build_parser(
    flags: &ParserFlags,
    http: &HttpFlags,
    layers: &Layers,
) -> Result<Box<dyn AmrParser>, CliError> {
    if let Some(path) = &flags.parser_script {
        let table = read_tsv(path)?;
        return Ok(Box::new(ScriptedParser::from_table(table, flags.parser_strict)));
    }
    if flags.parser_embedded {
        return Ok(Box::new(EmbeddedPenmanParser));
    }
    let endpoint = layers.resolve_opt("parser-endpoint", flags.parser_endpoint.clone())?;
    match endpoint {
        Some(endpoint) => {
            let cfg = http_config(layers, endpoint, None, None, http)?;
            Ok(Box::new(HttpAmrParser::new(cfg)))
        }
        None => Err(CliError::Usage(
            "no AMR parser configured: pass --parser-endpoint (or SWAN_PARSER_ENDPOINT), --parser-script FILE, or --parser-embedded".into(),
        )),
    }
}

pub fn build_llm(
    flags: &LlmFlags,
    http: &HttpFlags,
    layers: &Layers,
) -> Result<Box<dyn LlmClient>, CliError> {
    if let Some(path) = &flags.llm_script {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let replies: Vec<String> = text.lines().map(str::to_string).collect();
        return Ok(Box::new(SequenceLlm::new(replies)));
    }
    if flags.llm_echo_template {
        return Ok(Box::new(EchoTemplateLlm));
    }
    let endpoint = layers.resolve_opt("llm-endpoint", flags.llm_endpoint.clone())?;
    match endpoint {
        Some(endpoint) => {
            let cfg = http_config(
                layers,
                endpoint,
                flags.llm_api_key.clone(),
                flags.llm_model.clone(),
                http,
            )?;
            Ok(Box::new(OpenAiChatClient::new(cfg)))
        }
        None => Err(CliError::Usage(
            "no LLM configured: pass --llm-endpoint (or SWAN_LLM_ENDPOINT), --llm-script FILE, or --llm-echo-template".into(),
        )),
    }
}

pub fn build_paraphraser(
    flags: &ParaphraseFlags,
    llm_flags: &LlmFlags,
    http: &HttpFlags,
    layers: &Layers,
) -> Result<Box<dyn Paraphraser>, CliError> {
    if flags.paraphrase_identity {
        return Ok(Box::new(IdentityParaphraser));
    }
    if let Some(path) = &flags.paraphrase_script {
        let table = read_tsv(path)?;
        let mut p = ScriptedParaphraser::new(false);
        for (k, v) in table {
            p = p.with_entry(&k, &v);
        }
        return Ok(Box::new(p));
    }
    if flags.paraphrase_llm {
        let endpoint = layers
            .resolve_opt("llm-endpoint", llm_flags.llm_endpoint.clone())?
            .ok_or_else(|| {
                CliError::Usage("--paraphrase-llm needs --llm-endpoint or SWAN_LLM_ENDPOINT".into())
            })?;
        let cfg = http_config(
            layers,
            endpoint,
            llm_flags.llm_api_key.clone(),
            llm_flags.llm_model.clone(),
            http,
        )?;
        return Ok(Box::new(LlmParaphraser::new(OpenAiChatClient::new(cfg))));
    }
    Err(CliError::Usage(
        "no paraphraser configured: pass --paraphrase-identity, --paraphrase-script FILE, or --paraphrase-llm".into(),
    ))
}
