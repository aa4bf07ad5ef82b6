use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{analyze, AnalyzerConfig};
use crate::error::{Error, Result};

/// Which topic fields make up a query: title (`sk`), description (`sv`), or
/// title + description + narrative (`lv`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryKind {
    #[default]
    Sk,
    Sv,
    Lv,
}

impl FromStr for QueryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sk" => Ok(QueryKind::Sk),
            "sv" => Ok(QueryKind::Sv),
            "lv" => Ok(QueryKind::Lv),
            other => Err(Error::Config(format!(
                "unknown query type `{other}` (expected sk|sv|lv)"
            ))),
        }
    }
}

impl fmt::Display for QueryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QueryKind::Sk => "sk",
            QueryKind::Sv => "sv",
            QueryKind::Lv => "lv",
        })
    }
}

/// An analyzed query. Each segment is one topic field; sequential
/// dependencies are only formed inside a segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub kind: QueryKind,
    pub segments: Vec<Vec<String>>,
}

impl Query {
    pub fn new<S: Into<String>>(id: impl Into<String>, terms: impl IntoIterator<Item = S>) -> Self {
        Query {
            id: id.into(),
            kind: QueryKind::Sk,
            segments: vec![terms.into_iter().map(Into::into).collect()],
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().flatten().map(String::as_str)
    }

    /// |q| = Σ_w c(w, q).
    pub fn len(&self) -> usize {
        self.segments.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Topic {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub narrative: String,
}

impl Topic {
    pub fn to_query(&self, kind: QueryKind, analyzer: &AnalyzerConfig) -> Query {
        let fields: Vec<&str> = match kind {
            QueryKind::Sk => vec![&self.title],
            QueryKind::Sv => vec![&self.description],
            QueryKind::Lv => vec![&self.title, &self.description, &self.narrative],
        };
        Query {
            id: self.id.clone(),
            kind,
            segments: fields
                .into_iter()
                .map(|f| analyze(f, analyzer))
                .filter(|seg| !seg.is_empty())
                .collect(),
        }
    }
}

/// Reads topics as JSON lines with `id`, `title`, `description`, `narrative`.
pub fn read_topics(path: &Path) -> Result<Vec<Topic>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out: Vec<Topic> = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let topic: Topic =
            serde_json::from_str(&line).map_err(|e| Error::parse(path.display().to_string(), n + 1, e.to_string()))?;
        if out.iter().any(|t| t.id == topic.id) {
            return Err(Error::parse(
                path.display().to_string(),
                n + 1,
                format!("duplicate topic id `{}`", topic.id),
            ));
        }
        out.push(topic);
    }
    Ok(out)
}
