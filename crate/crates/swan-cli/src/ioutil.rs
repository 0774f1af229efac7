//! File ingestion helpers for the CLI: paragraph corpora, score lists, and
//! session JSON.

use std::path::Path;

use swan_core::detector::segment_sentences;
use swan_core::injector::InjectionSession;

use crate::CliError;

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

/// Reads blank-line-separated paragraphs. Pre-segmented input keeps one
/// sentence per line; otherwise each paragraph block is segmented by the
/// detector's rules.
pub fn read_paragraphs(path: &Path, pre_segmented: bool) -> Result<Vec<Vec<String>>, CliError> {
    let text = read(path)?;
    let mut paragraphs = Vec::new();
    let mut current: Vec<String> = Vec::new();
    let mut block = String::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if pre_segmented {
                if !current.is_empty() {
                    paragraphs.push(std::mem::take(&mut current));
                }
            } else if !block.trim().is_empty() {
                paragraphs.push(segment_sentences(&block));
                block.clear();
            }
        } else if pre_segmented {
            current.push(line.trim().to_string());
        } else {
            if !block.is_empty() {
                block.push(' ');
            }
            block.push_str(line.trim());
        }
    }
    if pre_segmented {
        if !current.is_empty() {
            paragraphs.push(current);
        }
    } else if !block.trim().is_empty() {
        paragraphs.push(segment_sentences(&block));
    }
    if paragraphs.is_empty() {
        return Err(CliError::Usage(format!(
            "{} contains no paragraphs",
            path.display()
        )));
    }
    Ok(paragraphs)
}

/// Reads one score per line.
pub fn read_scores(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = read(path)?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("{}: invalid score `{l}`", path.display())))
        })
        .collect()
}

/// Reads a sessions file: either a single session object or an array.
pub fn read_sessions(path: &Path) -> Result<Vec<InjectionSession>, CliError> {
    let text = read(path)?;
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: invalid sessions JSON: {e}", path.display())))
    } else {
        serde_json::from_str::<InjectionSession>(&text)
            .map(|s| vec![s])
            .map_err(|e| CliError::Usage(format!("{}: invalid session JSON: {e}", path.display())))
    }
}

/// Prints a machine-readable JSON value on stdout.
pub fn emit_json<T: serde::Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Other(format!("serialization failed: {e}")))?;
    println!("{text}");
    Ok(())
}

/// Writes optional CSV rows (header first) when a path was requested.
pub fn maybe_write_csv(
    path: Option<&Path>,
    header: &str,
    rows: &[String],
) -> Result<(), CliError> {
    let Some(path) = path else { return Ok(()) };
    let mut out = String::with_capacity(rows.len() * 16 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    std::fs::write(path, out)
        .map_err(|e| CliError::Other(format!("cannot write {}: {e}", path.display())))
}
