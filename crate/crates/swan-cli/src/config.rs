//! Layered configuration: defaults < config file < environment < flags.
//!
//! The config file is a flat, typed key=value format, one pair per line,
//! `#` comments allowed, no nesting. Unknown keys are rejected. Every key
//! maps to an environment variable `SWAN_<KEY>` with `-` replaced by `_`
//! and upper-cased (e.g. `llm-endpoint` -> `SWAN_LLM_ENDPOINT`).

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Every recognized config key. The help output of the CLI documents each
/// of these as a flag of the same name.
pub const CONFIG_KEYS: &[&str] = &[
    "llm-endpoint",
    "llm-api-key",
    "llm-model",
    "parser-endpoint",
    "seed",
    "sentences",
    "max-templates",
    "max-attempts",
    "theta-accept",
    "theta-detect",
    "lambda",
    "z-threshold",
    "restarts",
    "sim-table",
    "min-freq",
    "max-freq",
    "min-nodes",
    "size",
    "in-flight-limit",
    "http-timeout-secs",
];

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Resolved file layer plus lookup logic for env and flag layers.
#[derive(Debug, Default)]
pub struct Layers {
    file: HashMap<String, String>,
}

impl Layers {
    /// Loads the file layer (empty when no path is given).
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let Some(path) = path else {
            return Ok(Layers::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let mut file = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError(format!("{}:{}: expected `key = value`", path.display(), i + 1))
            })?;
            let key = key.trim();
            if !CONFIG_KEYS.contains(&key) {
                return Err(ConfigError(format!(
                    "{}:{}: unknown key `{key}`",
                    path.display(),
                    i + 1
                )));
            }
            file.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Layers { file })
    }

    fn env_value(key: &str) -> Option<String> {
        let var = format!("SWAN_{}", key.to_uppercase().replace('-', "_"));
        std::env::var(var).ok()
    }

    fn raw(&self, key: &str) -> Option<String> {
        debug_assert!(CONFIG_KEYS.contains(&key), "unknown config key `{key}`");
        Self::env_value(key).or_else(|| self.file.get(key).cloned())
    }

    /// Flag wins, then env, then file, then the default.
    pub fn resolve<T: FromStr + Clone>(
        &self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, ConfigError> {
        Ok(self.resolve_opt(key, flag)?.unwrap_or(default))
    }

    /// As [`resolve`](Self::resolve) but with no default.
    pub fn resolve_opt<T: FromStr + Clone>(
        &self,
        key: &str,
        flag: Option<T>,
    ) -> Result<Option<T>, ConfigError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| ConfigError(format!("invalid value `{raw}` for `{key}`"))),
            None => Ok(None),
        }
    }
}
