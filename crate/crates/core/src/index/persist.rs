//! Index file format.
//!
//! ```text
//! VNORM-INDEX\n
//! version <u32>\n
//! sha256 <hex digest of payload>\n
//! <canonical JSON payload>
//! ```
//!
//! The payload lists the vocabulary in sorted order, documents sorted by id
//! and the postings, so saving the same index twice yields identical bytes.
//! Derived statistics are recomputed on load and the stored postings are
//! checked against the recomputed ones.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Document, PositionalIndex, Posting, TermId, Vocabulary};
use crate::analysis::AnalyzerConfig;
use crate::error::{Error, Result};

pub const INDEX_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "VNORM-INDEX";

#[derive(Serialize, Deserialize)]
struct Payload {
    analyzer: AnalyzerConfig,
    terms: Vec<String>,
    docs: Vec<StoredDoc>,
    postings: Vec<Vec<Posting>>,
}

#[derive(Serialize, Deserialize)]
struct StoredDoc {
    id: String,
    terms: Vec<u32>,
}

pub(crate) fn encode(index: &PositionalIndex) -> Vec<u8> {
    let payload = Payload {
        analyzer: index.analyzer.clone(),
        terms: index.vocab.terms.clone(),
        docs: index
            .docs
            .iter()
            .map(|d| StoredDoc {
                id: d.id.clone(),
                terms: d.terms.iter().map(|t| t.0).collect(),
            })
            .collect(),
        postings: index.postings.clone(),
    };
    let body = serde_json::to_vec(&payload).expect("index payload serializes");
    let digest = hex::encode(Sha256::digest(&body));
    let mut out = format!("{MAGIC}\nversion {INDEX_FORMAT_VERSION}\nsha256 {digest}\n").into_bytes();
    out.extend_from_slice(&body);
    out
}

pub(crate) fn decode(bytes: &[u8]) -> Result<PositionalIndex> {
    let mut rest = bytes;
    let mut header = |label: &str| -> Result<String> {
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Corrupt(format!("truncated header (missing {label})")))?;
        let line = std::str::from_utf8(&rest[..nl])
            .map_err(|_| Error::Corrupt("header is not UTF-8".into()))?
            .to_string();
        rest = &rest[nl + 1..];
        Ok(line)
    };
    if header("magic")? != MAGIC {
        return Err(Error::Corrupt("bad magic header".into()));
    }
    let version = header("version")?;
    let version: u32 = version
        .strip_prefix("version ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Corrupt(format!("bad version line `{version}`")))?;
    if version != INDEX_FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: INDEX_FORMAT_VERSION,
        });
    }
    let digest_line = header("checksum")?;
    let digest = digest_line
        .strip_prefix("sha256 ")
        .ok_or_else(|| Error::Corrupt("bad checksum line".into()))?;
    if hex::encode(Sha256::digest(rest)) != digest {
        return Err(Error::Corrupt("checksum mismatch".into()));
    }
    let payload: Payload = serde_json::from_slice(rest).map_err(|e| Error::Corrupt(format!("payload: {e}")))?;

    let nterms = payload.terms.len() as u32;
    if payload.terms.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Corrupt("vocabulary not strictly sorted".into()));
    }
    if payload.docs.windows(2).any(|w| w[0].id >= w[1].id) {
        return Err(Error::Corrupt("documents not strictly sorted by id".into()));
    }
    let mut docs = Vec::with_capacity(payload.docs.len());
    for d in payload.docs {
        if let Some(bad) = d.terms.iter().find(|&&t| t >= nterms) {
            return Err(Error::Corrupt(format!("document `{}` references term {bad}", d.id)));
        }
        docs.push(Document {
            id: d.id,
            terms: d.terms.into_iter().map(TermId).collect(),
        });
    }
    let index = PositionalIndex::assemble(payload.analyzer, Vocabulary::from_sorted(payload.terms), docs);
    if index.postings != payload.postings {
        return Err(Error::Corrupt("stored postings disagree with stored documents".into()));
    }
    Ok(index)
}

/// Writes the index; refuses to replace an existing file unless `overwrite`.
pub fn save_index(index: &PositionalIndex, path: &Path, overwrite: bool) -> Result<()> {
    if path.exists() && !overwrite {
        return Err(Error::Precondition(format!(
            "{} already exists (pass --force to overwrite)",
            path.display()
        )));
    }
    std::fs::write(path, encode(index)).map_err(|e| Error::io(path, e))
}

pub fn load_index(path: &Path) -> Result<PositionalIndex> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
