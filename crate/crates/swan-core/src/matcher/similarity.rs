//! Concept similarity: exact match by default, with an optional table of
//! graded concept-pair scores. Template placeholders (NE/N/X) match any
//! concept with full credit on either side, which keeps scoring symmetric.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::bank::is_placeholder;

use super::MatchError;

/// Graded similarity lookup loaded from a `a<TAB>b<TAB>score` file.
/// Lookups are symmetric; absent pairs score 0.
#[derive(Debug, Clone, Default)]
pub struct SimilarityTable {
    map: HashMap<(String, String), f64>,
}

impl SimilarityTable {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, String, f64)>) -> Self {
        let mut map = HashMap::new();
        for (a, b, score) in pairs {
            map.insert((a.clone(), b.clone()), score);
            map.insert((b, a), score);
        }
        SimilarityTable { map }
    }

    pub fn load(path: &Path) -> Result<Self, MatchError> {
        let text = fs::read_to_string(path).map_err(|e| MatchError::Table(e.to_string()))?;
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let (a, b, s) = match (cols.next(), cols.next(), cols.next()) {
                (Some(a), Some(b), Some(s)) => (a, b, s),
                _ => {
                    return Err(MatchError::Table(format!(
                        "line {}: expected `a<TAB>b<TAB>score`",
                        i + 1
                    )))
                }
            };
            let score: f64 = s.parse().map_err(|_| {
                MatchError::Table(format!("line {}: invalid score `{s}`", i + 1))
            })?;
            if !(0.0..=1.0).contains(&score) {
                return Err(MatchError::Table(format!(
                    "line {}: score {score} outside [0,1]",
                    i + 1
                )));
            }
            pairs.push((a.to_string(), b.to_string(), score));
        }
        Ok(Self::from_pairs(pairs))
    }

    pub fn get(&self, a: &str, b: &str) -> f64 {
        self.map
            .get(&(a.to_string(), b.to_string()))
            .copied()
            .unwrap_or(0.0)
    }
}

/// Instance-triple credit function.
#[derive(Debug, Clone, Default)]
pub enum ConceptSimilarity {
    /// 1 if the concepts are equal, else 0.
    #[default]
    Exact,
    /// Looked-up graded score, default 0 for absent pairs.
    Table(SimilarityTable),
}

impl ConceptSimilarity {
    /// Credit in [0,1] for aligning two concepts. Placeholder concepts
    /// match anything with credit 1.
    pub fn credit(&self, a: &str, b: &str) -> f64 {
        if is_placeholder(a) || is_placeholder(b) {
            return 1.0;
        }
        match self {
            ConceptSimilarity::Exact => {
                if a == b {
                    1.0
                } else {
                    0.0
                }
            }
            ConceptSimilarity::Table(t) => t.get(a, b),
        }
    }
}
