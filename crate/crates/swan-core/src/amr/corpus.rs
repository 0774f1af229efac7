//! Corpus file ingestion: UTF-8 text with one Penman graph per
//! blank-line-separated block (multi-line graphs allowed, `#`-prefixed
//! metadata lines skipped) or one graph per line.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use super::{parse_penman, AmrGraph};

/// How graphs are laid out in a corpus file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorpusLayout {
    /// Blank-line-separated blocks; a block may span multiple lines.
    #[default]
    Blocks,
    /// One graph per line.
    PerLine,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("corpus entry {index}: {source}")]
    Parse {
        index: usize,
        #[source]
        source: super::PenmanError,
    },
}

/// Reads every graph from `path`.
pub fn read_corpus(path: &Path, layout: CorpusLayout) -> Result<Vec<AmrGraph>, CorpusError> {
    let text = fs::read_to_string(path)?;
    read_corpus_str(&text, layout)
}

/// Reads every graph from an in-memory corpus string.
pub fn read_corpus_str(text: &str, layout: CorpusLayout) -> Result<Vec<AmrGraph>, CorpusError> {
    let entries: Vec<String> = match layout {
        CorpusLayout::PerLine => text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect(),
        CorpusLayout::Blocks => {
            let mut blocks = Vec::new();
            let mut current = String::new();
            for line in text.lines() {
                let trimmed = line.trim();
                if trimmed.starts_with('#') {
                    continue;
                }
                if trimmed.is_empty() {
                    if !current.is_empty() {
                        blocks.push(std::mem::take(&mut current));
                    }
                } else {
                    if !current.is_empty() {
                        current.push(' ');
                    }
                    current.push_str(trimmed);
                }
            }
            if !current.is_empty() {
                blocks.push(current);
            }
            blocks
        }
    };
    entries
        .iter()
        .enumerate()
        .map(|(index, src)| parse_penman(src).map_err(|source| CorpusError::Parse { index, source }))
        .collect()
}
