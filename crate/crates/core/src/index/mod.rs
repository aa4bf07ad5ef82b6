//! Immutable positional inverted index with collection statistics.
//!
//! Terms are interned into a lexicographically sorted vocabulary and
//! documents are stored sorted by id, so two builds over the same corpus
//! produce identical structures regardless of input order. Empty documents
//! are kept: they count toward `N` and the averages.

pub mod counts;
mod persist;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use persist::{load_index, save_index, INDEX_FORMAT_VERSION};

use crate::analysis::{analyze, AnalyzerConfig};
use crate::error::{Error, Result};
use crate::scope::{ScopeMeasure, TermShape};

/// Default span of the unordered proximity window.
pub const DEFAULT_WINDOW: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TermId(pub u32);

/// Internal document number: position of the document in id order.
pub type DocNum = u32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub terms: Vec<TermId>,
}

impl Document {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    lookup: HashMap<String, TermId>,
}

impl Vocabulary {
    fn from_sorted(terms: Vec<String>) -> Self {
        let lookup = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), TermId(i as u32)))
            .collect();
        Self { terms, lookup }
    }

    pub fn get(&self, term: &str) -> Option<TermId> {
        self.lookup.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> Option<&str> {
        self.terms.get(id.0 as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: DocNum,
    pub positions: Vec<u32>,
}

/// Collection-level counts. Averages are `None` for an empty collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionStats {
    pub num_docs: u32,
    pub total_length: u64,
    pub avg_length: Option<f64>,
    pub avg_unique: Option<f64>,
    pub avg_entropy_power: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub mean: f64,
    /// Population standard deviation over the mean; `None` when the mean is 0.
    pub coeff_var: Option<f64>,
}

impl StatSummary {
    pub fn of(samples: &[f64]) -> Option<StatSummary> {
        if samples.is_empty() {
            return None;
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let coeff_var = (mean > 0.0).then(|| var.sqrt() / mean);
        Some(StatSummary { mean, coeff_var })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionSummary {
    pub num_docs: u32,
    pub total_length: u64,
    pub measure: ScopeMeasure,
    pub length: StatSummary,
    pub entropy_power: StatSummary,
    pub verbosity: StatSummary,
}

#[derive(Debug, Clone)]
pub struct PositionalIndex {
    analyzer: AnalyzerConfig,
    vocab: Vocabulary,
    docs: Vec<Document>,
    doc_lookup: HashMap<String, DocNum>,
    postings: Vec<Vec<Posting>>,
    cf: Vec<u64>,
    shapes: Vec<TermShape>,
    stats: CollectionStats,
}

impl PositionalIndex {
    /// Analyzes and indexes `(doc_id, text)` pairs.
    pub fn build<I, S, T>(corpus: I, analyzer: AnalyzerConfig) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: AsRef<str>,
    {
        let docs = corpus
            .into_iter()
            .map(|(id, text)| (id.into(), analyze(text.as_ref(), &analyzer)))
            .collect::<Vec<_>>();
        Self::from_tokens(docs, analyzer)
    }

    /// Indexes already-analyzed token sequences.
    pub fn from_tokens<S: AsRef<str>>(docs: Vec<(String, Vec<S>)>, analyzer: AnalyzerConfig) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (id, _) in &docs {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateDocId(id.clone()));
            }
        }
        let vocab: BTreeSet<&str> = docs
            .iter()
            .flat_map(|(_, toks)| toks.iter().map(AsRef::as_ref))
            .collect();
        let vocab = Vocabulary::from_sorted(vocab.into_iter().map(str::to_string).collect());

        let mut documents: Vec<Document> = docs
            .iter()
            .map(|(id, toks)| Document {
                id: id.clone(),
                terms: toks
                    .iter()
                    .map(|t| vocab.get(t.as_ref()).expect("term interned above"))
                    .collect(),
            })
            .collect();
        documents.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(Self::assemble(analyzer, vocab, documents))
    }

    fn assemble(analyzer: AnalyzerConfig, vocab: Vocabulary, docs: Vec<Document>) -> Self {
        let mut postings: Vec<Vec<Posting>> = vec![Vec::new(); vocab.len()];
        let mut cf = vec![0u64; vocab.len()];
        let mut shapes = Vec::with_capacity(docs.len());
        let mut doc_lookup = HashMap::with_capacity(docs.len());
        for (num, doc) in docs.iter().enumerate() {
            let num = num as DocNum;
            doc_lookup.insert(doc.id.clone(), num);
            let mut local: BTreeMap<TermId, Vec<u32>> = BTreeMap::new();
            for (pos, &t) in doc.terms.iter().enumerate() {
                local.entry(t).or_default().push(pos as u32 + 1);
            }
            let freqs: Vec<u32> = local.values().map(|p| p.len() as u32).collect();
            shapes.push(TermShape::from_counts(&freqs));
            for (t, positions) in local {
                cf[t.0 as usize] += positions.len() as u64;
                postings[t.0 as usize].push(Posting { doc: num, positions });
            }
        }
        let n = docs.len();
        let total_length: u64 = shapes.iter().map(|s| s.length as u64).sum();
        let mean = |f: &dyn Fn(&TermShape) -> f64| (n > 0).then(|| shapes.iter().map(f).sum::<f64>() / n as f64);
        let stats = CollectionStats {
            num_docs: n as u32,
            total_length,
            avg_length: (n > 0).then(|| total_length as f64 / n as f64),
            avg_unique: mean(&|s| s.unique as f64),
            avg_entropy_power: mean(&|s| s.entropy_power),
        };
        Self {
            analyzer,
            vocab,
            docs,
            doc_lookup,
            postings,
            cf,
            shapes,
            stats,
        }
    }

    pub fn analyzer(&self) -> &AnalyzerConfig {
        &self.analyzer
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn stats(&self) -> &CollectionStats {
        &self.stats
    }

    pub fn num_docs(&self) -> u32 {
        self.stats.num_docs
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn document(&self, num: DocNum) -> &Document {
        &self.docs[num as usize]
    }

    pub fn doc_num(&self, doc_id: &str) -> Option<DocNum> {
        self.doc_lookup.get(doc_id).copied()
    }

    pub fn shape(&self, num: DocNum) -> &TermShape {
        &self.shapes[num as usize]
    }

    pub fn postings(&self, term: TermId) -> &[Posting] {
        self.postings.get(term.0 as usize).map_or(&[], Vec::as_slice)
    }

    /// c(w, C); 0 for terms outside the vocabulary.
    pub fn cf(&self, term: TermId) -> u64 {
        self.cf.get(term.0 as usize).copied().unwrap_or(0)
    }

    pub fn df(&self, term: TermId) -> u32 {
        self.postings(term).len() as u32
    }

    /// Maximum-likelihood collection model p(w|C) = c(w,C) / |C|.
    pub fn collection_prob(&self, term: TermId) -> f64 {
        if self.stats.total_length == 0 {
            return 0.0;
        }
        self.cf(term) as f64 / self.stats.total_length as f64
    }

    pub fn positions(&self, term: TermId, doc: DocNum) -> &[u32] {
        let list = self.postings(term);
        match list.binary_search_by_key(&doc, |p| p.doc) {
            Ok(i) => &list[i].positions,
            Err(_) => &[],
        }
    }

    pub fn tf(&self, term: TermId, doc: DocNum) -> u32 {
        self.positions(term, doc).len() as u32
    }

    fn require_doc(&self, doc_id: &str) -> Result<DocNum> {
        self.doc_num(doc_id)
            .ok_or_else(|| Error::UnknownDoc(doc_id.to_string()))
    }

    /// c(w, d) by term string. Unknown document is an error, an unknown term
    /// simply has frequency 0.
    pub fn term_frequency(&self, term: &str, doc_id: &str) -> Result<u32> {
        let doc = self.require_doc(doc_id)?;
        Ok(self.vocab.get(term).map_or(0, |t| self.tf(t, doc)))
    }

    pub fn ordered_bigram_count(&self, first: &str, second: &str, doc_id: &str) -> Result<u32> {
        let doc = self.require_doc(doc_id)?;
        match (self.vocab.get(first), self.vocab.get(second)) {
            (Some(a), Some(b)) => Ok(counts::ordered_pairs(self.positions(a, doc), self.positions(b, doc))),
            _ => Ok(0),
        }
    }

    pub fn unordered_window_count(&self, first: &str, second: &str, doc_id: &str, span: u32) -> Result<u32> {
        if span < 2 {
            return Err(Error::Precondition(format!("window span must be >= 2, got {span}")));
        }
        let doc = self.require_doc(doc_id)?;
        match (self.vocab.get(first), self.vocab.get(second)) {
            (Some(a), Some(b)) => Ok(counts::window_pairs(
                self.positions(a, doc),
                self.positions(b, doc),
                span,
                a == b,
            )),
            _ => Ok(0),
        }
    }

    /// Visits every document containing both terms.
    fn for_each_cooccurrence(&self, a: TermId, b: TermId, mut f: impl FnMut(&[u32], &[u32])) {
        let (pa, pb) = (self.postings(a), self.postings(b));
        let (mut i, mut j) = (0, 0);
        while i < pa.len() && j < pb.len() {
            match pa[i].doc.cmp(&pb[j].doc) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    f(&pa[i].positions, &pb[j].positions);
                    i += 1;
                    j += 1;
                }
            }
        }
    }

    /// c_{#1}(a b, C).
    pub fn collection_ordered_count(&self, a: TermId, b: TermId) -> u64 {
        let mut total = 0u64;
        self.for_each_cooccurrence(a, b, |x, y| total += counts::ordered_pairs(x, y) as u64);
        total
    }

    /// c_{#uwN}(a b, C).
    pub fn collection_window_count(&self, a: TermId, b: TermId, span: u32) -> u64 {
        let mut total = 0u64;
        self.for_each_cooccurrence(a, b, |x, y| total += counts::window_pairs(x, y, span, a == b) as u64);
        total
    }

    /// Mean scope over all documents (empty documents contribute 0).
    pub fn avg_scope(&self, measure: ScopeMeasure) -> Option<f64> {
        match measure {
            ScopeMeasure::UniqLength => self.stats.avg_unique,
            ScopeMeasure::EntropyPower => self.stats.avg_entropy_power,
            ScopeMeasure::LengthPower { .. } => self.mean_over_docs(|s| measure.scope(s)),
        }
    }

    /// Mean verbosity over all documents (empty documents contribute 1).
    pub fn avg_verbosity(&self, measure: ScopeMeasure) -> Option<f64> {
        self.mean_over_docs(|s| measure.verbosity(s))
    }

    fn mean_over_docs(&self, f: impl Fn(&TermShape) -> f64) -> Option<f64> {
        let n = self.shapes.len();
        (n > 0).then(|| self.shapes.iter().map(f).sum::<f64>() / n as f64)
    }

    /// Mean and coefficient of variation of |d|, h(d) and v(d).
    pub fn collection_summary(&self, measure: ScopeMeasure) -> Result<CollectionSummary> {
        if self.shapes.is_empty() {
            return Err(Error::Degenerate(
                "collection summary needs at least one document".into(),
            ));
        }
        let lengths: Vec<f64> = self.shapes.iter().map(|s| s.length as f64).collect();
        let entropy: Vec<f64> = self.shapes.iter().map(|s| s.entropy_power).collect();
        let verbosity: Vec<f64> = self.shapes.iter().map(|s| measure.verbosity(s)).collect();
        let summary = |xs: &[f64]| StatSummary::of(xs).expect("non-empty");
        Ok(CollectionSummary {
            num_docs: self.stats.num_docs,
            total_length: self.stats.total_length,
            measure,
            length: summary(&lengths),
            entropy_power: summary(&entropy),
            verbosity: summary(&verbosity),
        })
    }

    /// Resolves a term string through the index's own vocabulary.
    pub fn term_id(&self, term: &str) -> Option<TermId> {
        self.vocab.get(term)
    }

    /// Token strings of a stored document.
    pub fn doc_tokens(&self, num: DocNum) -> Vec<&str> {
        self.docs[num as usize]
            .terms
            .iter()
            .map(|&t| self.vocab.term(t).expect("stored term in vocabulary"))
            .collect()
    }
}

impl PartialEq for PositionalIndex {
    fn eq(&self, other: &Self) -> bool {
        self.analyzer == other.analyzer
            && self.vocab.terms == other.vocab.terms
            && self.docs == other.docs
            && self.postings == other.postings
            && self.cf == other.cf
            && self.shapes == other.shapes
            && self.stats == other.stats
    }
}

#[derive(Deserialize)]
struct CorpusLine {
    id: String,
    text: String,
}

/// Reads a JSON-lines corpus of `{"id": ..., "text": ...}` objects. Blank
/// lines are skipped.
pub fn read_corpus(path: &Path) -> Result<Vec<(String, String)>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CorpusLine =
            serde_json::from_str(&line).map_err(|e| Error::parse(path.display().to_string(), n + 1, e.to_string()))?;
        out.push((rec.id, rec.text));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy() -> PositionalIndex {
        PositionalIndex::build([("d1", "a b a c"), ("d2", "a b")], AnalyzerConfig::default()).unwrap()
    }

    #[test]
    fn toy_stats() {
        let idx = toy();
        let a = idx.term_id("a").unwrap();
        assert_eq!(idx.num_docs(), 2);
        assert_eq!(idx.stats().total_length, 6);
        assert_eq!(idx.cf(a), 3);
        assert_eq!(idx.df(a), 2);
        assert_eq!(idx.stats().avg_length, Some(3.0));
    }

    #[test]
    fn single_empty_document() {
        let idx = PositionalIndex::build([("e", "")], AnalyzerConfig::default()).unwrap();
        assert_eq!(idx.num_docs(), 1);
        assert_eq!(idx.stats().total_length, 0);
        assert_eq!(idx.stats().avg_length, Some(0.0));
        assert_eq!(idx.term_frequency("a", "e").unwrap(), 0);
    }

    #[test]
    fn empty_corpus_has_undefined_stats() {
        let idx = PositionalIndex::build(Vec::<(String, String)>::new(), AnalyzerConfig::default()).unwrap();
        assert_eq!(idx.num_docs(), 0);
        assert_eq!(idx.stats().avg_length, None);
        assert!(idx.collection_summary(ScopeMeasure::UniqLength).is_err());
    }

    #[test]
    fn single_token_posting() {
        let idx = PositionalIndex::build([("d1", "x")], AnalyzerConfig::default()).unwrap();
        let x = idx.term_id("x").unwrap();
        assert_eq!(
            idx.postings(x),
            &[Posting {
                doc: 0,
                positions: vec![1]
            }]
        );
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = PositionalIndex::build([("d1", "a"), ("d1", "b")], AnalyzerConfig::default()).unwrap_err();
        assert!(matches!(err, Error::DuplicateDocId(id) if id == "d1"));
    }

    #[test]
    fn term_frequency_cases() {
        let idx = toy();
        assert_eq!(idx.term_frequency("a", "d1").unwrap(), 2);
        assert_eq!(idx.term_frequency("z", "d1").unwrap(), 0);
        assert!(matches!(idx.term_frequency("a", "nope"), Err(Error::UnknownDoc(_))));
    }

    #[test]
    fn proximity_through_index() {
        let idx = PositionalIndex::build(
            [
                ("d", "a b c a b"),
                ("p", "a b"),
                ("r", "a a a"),
                ("w", "a x x x x x x x b"),
            ],
            AnalyzerConfig::default(),
        )
        .unwrap();
        assert_eq!(idx.ordered_bigram_count("a", "b", "d").unwrap(), 2);
        assert_eq!(idx.ordered_bigram_count("b", "a", "p").unwrap(), 0);
        assert_eq!(idx.ordered_bigram_count("a", "a", "r").unwrap(), 2);
        assert_eq!(idx.unordered_window_count("a", "b", "w", 8).unwrap(), 0);
        assert_eq!(idx.unordered_window_count("a", "b", "w", 9).unwrap(), 1);
        assert!(idx.unordered_window_count("a", "b", "w", 1).is_err());
        assert!(idx.unordered_window_count("a", "b", "zz", 8).is_err());
        let (a, b) = (idx.term_id("a").unwrap(), idx.term_id("b").unwrap());
        assert_eq!(idx.collection_ordered_count(a, b), 3);
    }

    #[test]
    fn insertion_order_does_not_matter() {
        let one = PositionalIndex::build([("d2", "a b"), ("d1", "a b a c")], AnalyzerConfig::default()).unwrap();
        assert_eq!(one, toy());
    }

    #[test]
    fn summary_examples() {
        let idx = PositionalIndex::build([("x", "a b"), ("y", "a b c d")], AnalyzerConfig::default()).unwrap();
        let s = idx.collection_summary(ScopeMeasure::UniqLength).unwrap();
        assert_eq!(s.length.mean, 3.0);
        assert!((s.length.coeff_var.unwrap() - 1.0 / 3.0).abs() < 1e-15);

        let same = PositionalIndex::build([("x", "a b"), ("y", "b a")], AnalyzerConfig::default()).unwrap();
        assert_eq!(
            same.collection_summary(ScopeMeasure::UniqLength)
                .unwrap()
                .length
                .coeff_var,
            Some(0.0)
        );

        let one = PositionalIndex::build([("x", "a b c")], AnalyzerConfig::default()).unwrap();
        assert_eq!(
            one.collection_summary(ScopeMeasure::EntropyPower)
                .unwrap()
                .length
                .coeff_var,
            Some(0.0)
        );
    }

    #[test]
    fn averages_include_empty_documents() {
        let idx = PositionalIndex::build([("a", "x y"), ("b", "")], AnalyzerConfig::default()).unwrap();
        assert_eq!(idx.avg_scope(ScopeMeasure::UniqLength), Some(1.0));
        // v = 1 for both: x y has two distinct terms, the empty doc is fixed at 1.
        assert_eq!(idx.avg_verbosity(ScopeMeasure::UniqLength), Some(1.0));
        assert_eq!(idx.stats().avg_length, Some(1.0));
    }
}
