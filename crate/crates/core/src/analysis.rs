//! Text-to-term pipeline: tokenize, case fold, drop stopwords, stem.
//!
//! The order is fixed: a stopword is matched against the lowercased token
//! (when lowercasing is on) and stemming runs last, so a stopword list never
//! needs stemmed entries.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stemmer {
    #[default]
    None,
    Porter,
}

impl FromStr for Stemmer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Stemmer::None),
            "porter" => Ok(Stemmer::Porter),
            other => Err(Error::Config(format!(
                "unknown stemmer `{other}` (expected none|porter)"
            ))),
        }
    }
}

impl fmt::Display for Stemmer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stemmer::None => f.write_str("none"),
            Stemmer::Porter => f.write_str("porter"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzerConfig {
    pub lowercase: bool,
    pub stopwords: BTreeSet<String>,
    pub stemmer: Stemmer,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            stopwords: BTreeSet::new(),
            stemmer: Stemmer::None,
        }
    }
}

impl AnalyzerConfig {
    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.stopwords = words.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_stemmer(mut self, stemmer: Stemmer) -> Self {
        self.stemmer = stemmer;
        self
    }
}

/// Splits `text` into maximal runs of alphanumeric characters and applies the
/// configured filters.
pub fn analyze(text: &str, config: &AnalyzerConfig) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|tok| !tok.is_empty())
        .filter_map(|tok| {
            let tok = if config.lowercase {
                tok.to_lowercase()
            } else {
                tok.to_string()
            };
            if config.stopwords.contains(&tok) {
                return None;
            }
            let tok = match config.stemmer {
                Stemmer::None => tok,
                Stemmer::Porter => porter_stemmer::stem(&tok),
            };
            (!tok.is_empty()).then_some(tok)
        })
        .collect()
}

/// Parses a stopword list: one term per line, `#` starts a comment.
pub fn parse_stopwords(contents: &str) -> BTreeSet<String> {
    contents
        .lines()
        .map(|line| line.split('#').next().unwrap_or("").trim())
        .filter(|line| !line.is_empty())
        .map(str::to_string)
        .collect()
}

pub fn load_stopwords(path: &Path) -> Result<BTreeSet<String>> {
    let contents = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_stopwords(&contents))
}
