use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::Hit;

/// Graded judgments, `qid → docid → grade`. Grade > 0 means relevant.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, qid: impl Into<String>, doc_id: impl Into<String>, grade: u32) -> Result<()> {
        let (qid, doc_id) = (qid.into(), doc_id.into());
        let docs = self.judgments.entry(qid.clone()).or_default();
        if docs.contains_key(&doc_id) {
            return Err(Error::Precondition(format!("duplicate judgment for ({qid}, {doc_id})")));
        }
        docs.insert(doc_id, grade);
        Ok(())
    }

    /// Parses `qid 0 docid rel` lines; `source` names the input in errors.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut out = Qrels::new();
        for (n, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let err = |m: String| Error::parse(source, n + 1, m);
            let [qid, _, doc, rel] = fields[..] else {
                return Err(err(format!("expected 4 fields, found {}", fields.len())));
            };
            let grade: i64 = rel
                .parse()
                .map_err(|_| err(format!("relevance `{rel}` is not an integer")))?;
            if grade < 0 {
                // trec_eval treats negative grades as unjudged
                continue;
            }
            out.insert(qid, doc, grade as u32).map_err(|e| err(e.to_string()))?;
        }
        Ok(out)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn grade(&self, qid: &str, doc_id: &str) -> Option<u32> {
        self.judgments.get(qid)?.get(doc_id).copied()
    }

    pub fn is_relevant(&self, qid: &str, doc_id: &str) -> bool {
        self.grade(qid, doc_id).is_some_and(|g| g > 0)
    }

    pub fn num_relevant(&self, qid: &str) -> usize {
        self.judgments
            .get(qid)
            .map_or(0, |d| d.values().filter(|&&g| g > 0).count())
    }

    /// Query ids with at least one judgment, in sorted order.
    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }

    pub fn to_trec(&self) -> String {
        let mut out = String::new();
        for (q, docs) in &self.judgments {
            for (d, g) in docs {
                let _ = writeln!(out, "{q} 0 {d} {g}");
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedDoc {
    pub doc_id: String,
    pub score: f64,
}

/// Ranked lists per query, rank 1 first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Run {
    pub tag: String,
    rankings: BTreeMap<String, Vec<RankedDoc>>,
}

impl Run {
    pub fn new(tag: impl Into<String>) -> Self {
        Run {
            tag: tag.into(),
            rankings: BTreeMap::new(),
        }
    }

    /// Sets the ranking of `qid`, which must not already be present.
    pub fn insert(&mut self, qid: impl Into<String>, docs: Vec<RankedDoc>) -> Result<()> {
        let qid = qid.into();
        if self.rankings.contains_key(&qid) {
            return Err(Error::Precondition(format!("query `{qid}` is already in the run")));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(d) = docs.iter().find(|d| !seen.insert(d.doc_id.as_str())) {
            return Err(Error::Precondition(format!(
                "document `{}` retrieved twice for `{qid}`",
                d.doc_id
            )));
        }
        self.rankings.insert(qid, docs);
        Ok(())
    }

    pub fn insert_hits(&mut self, qid: impl Into<String>, hits: &[Hit]) -> Result<()> {
        self.insert(
            qid,
            hits.iter()
                .map(|h| RankedDoc {
                    doc_id: h.doc_id.clone(),
                    score: h.score,
                })
                .collect(),
        )
    }

    pub fn ranking(&self, qid: &str) -> &[RankedDoc] {
        self.rankings.get(qid).map_or(&[], Vec::as_slice)
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.rankings.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.rankings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rankings.is_empty()
    }

    /// Parses `qid Q0 docid rank score tag` lines. Each query's list is
    /// ordered by the rank column; the file's order breaks equal ranks.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut lists: BTreeMap<String, Vec<(u64, usize, RankedDoc)>> = BTreeMap::new();
        let mut tag: Option<String> = None;
        for (n, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let err = |m: String| Error::parse(source, n + 1, m);
            let [qid, _, doc, rank, score, t] = fields[..] else {
                return Err(err(format!("expected 6 fields, found {}", fields.len())));
            };
            let rank: u64 = rank
                .parse()
                .map_err(|_| err(format!("rank `{rank}` is not a non-negative integer")))?;
            let score: f64 = score
                .parse()
                .map_err(|_| err(format!("score `{score}` is not a number")))?;
            if !score.is_finite() {
                return Err(err(format!("score `{score}` is not finite")));
            }
            tag.get_or_insert_with(|| t.to_string());
            let list = lists.entry(qid.to_string()).or_default();
            if list.iter().any(|(_, _, d)| d.doc_id == doc) {
                return Err(err(format!("document `{doc}` retrieved twice for `{qid}`")));
            }
            list.push((
                rank,
                n,
                RankedDoc {
                    doc_id: doc.to_string(),
                    score,
                },
            ));
        }
        let mut run = Run::new(tag.unwrap_or_default());
        for (q, mut list) in lists {
            list.sort_by_key(|&(rank, line, _)| (rank, line));
            run.rankings.insert(q, list.into_iter().map(|(_, _, d)| d).collect());
        }
        Ok(run)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_trec(&self) -> String {
        let tag = if self.tag.is_empty() { "vnorm" } else { &self.tag };
        let mut out = String::new();
        for (q, docs) in &self.rankings {
            for (i, d) in docs.iter().enumerate() {
                let _ = writeln!(out, "{q} Q0 {} {} {} {tag}", d.doc_id, i + 1, format_score(d.score));
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_trec()).map_err(|e| Error::io(path, e))
    }
}

/// Shortest round-trip form, padded to at least six significant digits.
pub fn format_score(x: f64) -> String {
    let s = format!("{x}");
    let digits = s
        .trim_start_matches('-')
        .chars()
        .filter(char::is_ascii_digit)
        .collect::<String>();
    let significant = digits.trim_start_matches('0').len();
    if significant >= 6 || !x.is_finite() {
        return s;
    }
    if x == 0.0 {
        return "0.00000".into();
    }
    let decimals = (5 - x.abs().log10().floor() as i64).max(0) as usize;
    format!("{x:.decimals$}")
}
