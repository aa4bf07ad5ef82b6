//! Retrieval functions and top-k search.
//!
//! A [`ScoringConfig`] names one of DP, JM, Okapi or MRF, optionally with
//! verbosity normalization (`vn`) and, for DP and Okapi, a lower bound
//! `delta`. [`Scorer`] binds a config to collection statistics and scores
//! any [`DocView`], indexed or not.

mod doc;
pub mod formulas;
mod query;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use doc::{DocView, IndexedDoc, TokenDoc};
pub use query::{read_topics, Query, QueryKind, Topic};

use crate::error::{Error, Result};
use crate::index::{DocNum, PositionalIndex, TermId, DEFAULT_WINDOW};
use crate::scope::{ScopeMeasure, TermShape};
use formulas::*;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpParams {
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OkapiParams {
    pub k1: f64,
    pub b: f64,
    #[serde(default = "default_k3")]
    pub k3: f64,
}

fn default_k3() -> f64 {
    1000.0
}

impl OkapiParams {
    pub fn new(k1: f64, b: f64) -> Self {
        OkapiParams {
            k1,
            b,
            k3: default_k3(),
        }
    }
}

/// Weights and smoothing for the sequential-dependence MRF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MrfParams {
    pub lambda_t: f64,
    pub lambda_o: f64,
    pub lambda_u: f64,
    pub mu_t: f64,
    pub mu_o: f64,
    pub mu_u: f64,
}

impl MrfParams {
    pub const DEFAULT_LAMBDAS: [f64; 3] = [0.85, 0.10, 0.05];

    /// Same μ for all three feature kinds.
    pub fn new(lambdas: [f64; 3], mu: f64) -> Self {
        MrfParams {
            lambda_t: lambdas[0],
            lambda_o: lambdas[1],
            lambda_u: lambdas[2],
            mu_t: mu,
            mu_o: mu,
            mu_u: mu,
        }
    }

    fn scaled(self, avgv: f64) -> Self {
        MrfParams {
            mu_t: self.mu_t / avgv,
            mu_o: self.mu_o / avgv,
            mu_u: self.mu_u / avgv,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KPolicy {
    /// k = 1.
    #[default]
    Unit,
    /// k = avgv, realized as k1 ← k1/avgv and μ ← μ/avgv.
    AvgvRescale,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VnConfig {
    pub measure: ScopeMeasure,
    #[serde(default)]
    pub k_policy: KPolicy,
}

impl VnConfig {
    pub fn new(measure: ScopeMeasure) -> Self {
        VnConfig {
            measure,
            k_policy: KPolicy::Unit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Model {
    Dp(DpParams),
    Jm { lambda: f64 },
    Okapi(OkapiParams),
    Mrf(MrfParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringConfig {
    #[serde(flatten)]
    pub model: Model,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vn: Option<VnConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

impl ScoringConfig {
    pub fn dp(mu: f64) -> Self {
        Self::plain(Model::Dp(DpParams { mu }))
    }

    pub fn jm(lambda: f64) -> Self {
        Self::plain(Model::Jm { lambda })
    }

    pub fn okapi(k1: f64, b: f64) -> Self {
        Self::plain(Model::Okapi(OkapiParams::new(k1, b)))
    }

    pub fn mrf(params: MrfParams) -> Self {
        Self::plain(Model::Mrf(params))
    }

    fn plain(model: Model) -> Self {
        ScoringConfig {
            model,
            vn: None,
            delta: None,
        }
    }

    pub fn with_vn(mut self, measure: ScopeMeasure) -> Self {
        self.vn = Some(VnConfig::new(measure));
        self
    }

    pub fn with_vn_config(mut self, vn: VnConfig) -> Self {
        self.vn = Some(vn);
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match self.model {
            Model::Dp(DpParams { mu }) => {
                if !(mu > 0.0 && mu.is_finite()) {
                    return bad(format!("mu must be > 0, got {mu}"));
                }
            }
            Model::Jm { lambda } => {
                if !(lambda > 0.0 && lambda < 1.0) {
                    return bad(format!("JM lambda must lie in (0, 1), got {lambda}"));
                }
                if self.vn.is_some() {
                    return bad("JM has no verbosity-normalized variant (use VN-DP with lengthpower:0)".into());
                }
            }
            Model::Okapi(OkapiParams { k1, b, k3 }) => {
                if !(k1 > 0.0 && k1.is_finite()) {
                    return bad(format!("k1 must be > 0, got {k1}"));
                }
                if !(0.0..=1.0).contains(&b) {
                    return bad(format!("b must lie in [0, 1], got {b}"));
                }
                if !(k3 >= 0.0 && k3.is_finite()) {
                    return bad(format!("k3 must be >= 0, got {k3}"));
                }
            }
            Model::Mrf(p) => {
                let ls = [p.lambda_t, p.lambda_o, p.lambda_u];
                if ls.iter().any(|&l| l.is_nan() || l < 0.0) || (ls.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return bad(format!("MRF lambdas must be >= 0 and sum to 1, got {ls:?}"));
                }
                if [p.mu_t, p.mu_o, p.mu_u].iter().any(|&m| !(m > 0.0 && m.is_finite())) {
                    return bad("MRF mu values must be > 0".into());
                }
            }
        }
        if let Some(delta) = self.delta {
            if !matches!(self.model, Model::Dp(_) | Model::Okapi(_)) {
                return bad("delta is only defined for dp and okapi".into());
            }
            if !(delta >= 0.0 && delta.is_finite()) {
                return bad(format!("delta must be >= 0, got {delta}"));
            }
        }
        if let Some(vn) = self.vn {
            vn.measure.validate()?;
            if vn.k_policy == KPolicy::AvgvRescale && !vn.measure.is_length_power() {
                return bad(format!(
                    "avgv rescaling applies to lengthpower only, not {}",
                    vn.measure
                ));
            }
        }
        Ok(())
    }

    /// Short model name such as `VN-DP+`.
    pub fn label(&self) -> String {
        let base = match self.model {
            Model::Dp(_) => "DP",
            Model::Jm { .. } => "JM",
            Model::Okapi(_) => "Okapi",
            Model::Mrf(_) => "MRF",
        };
        let vn = if self.vn.is_some() { "VN-" } else { "" };
        let plus = if self.delta.is_some() { "+" } else { "" };
        format!("{vn}{base}{plus}")
    }
}

impl fmt::Display for ScoringConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())?;
        match self.model {
            Model::Dp(p) => write!(f, " mu={}", p.mu)?,
            Model::Jm { lambda } => write!(f, " lambda={lambda}")?,
            Model::Okapi(p) => write!(f, " k1={} b={} k3={}", p.k1, p.b, p.k3)?,
            Model::Mrf(p) => write!(
                f,
                " lambdas=({},{},{}) mu=({},{},{})",
                p.lambda_t, p.lambda_o, p.lambda_u, p.mu_t, p.mu_o, p.mu_u
            )?,
        }
        if let Some(d) = self.delta {
            write!(f, " delta={d}")?;
        }
        if let Some(vn) = self.vn {
            write!(f, " scope={}", vn.measure)?;
            if vn.k_policy == KPolicy::AvgvRescale {
                f.write_str(" k=avgv")?;
            }
        }
        Ok(())
    }
}

/// One distinct query term with its collection statistics. `id` is `None`
/// when the term never occurs in the collection.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryTerm {
    pub term: String,
    pub id: Option<TermId>,
    pub qtf: u32,
    pub cf: u64,
    pub df: u32,
}

/// An adjacent pair of query terms inside one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryPair {
    pub first: TermId,
    pub second: TermId,
    pub ordered_cf: u64,
    pub window_cf: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryDiagnostics {
    pub unknown_terms: Vec<String>,
    pub skipped_unigrams: usize,
    pub skipped_ordered: usize,
    pub skipped_window: usize,
}

impl QueryDiagnostics {
    pub fn is_clean(&self) -> bool {
        self.unknown_terms.is_empty() && self.skipped_ordered == 0 && self.skipped_window == 0
    }
}

/// A query resolved against one collection.
#[derive(Debug, Clone)]
pub struct PreparedQuery {
    pub id: String,
    /// |q|, counting unknown terms too.
    pub len: usize,
    /// Distinct terms in order of first appearance.
    pub terms: Vec<QueryTerm>,
    /// Each query token as an index into `terms`.
    pub sequence: Vec<usize>,
    pub pairs: Vec<QueryPair>,
    pub diagnostics: QueryDiagnostics,
}

impl PreparedQuery {
    pub fn new(query: &Query, index: &PositionalIndex) -> Result<Self> {
        Self::build(query, index, true)
    }

    fn build(query: &Query, index: &PositionalIndex, with_pairs: bool) -> Result<Self> {
        if query.is_empty() {
            return Err(Error::Precondition(format!("query `{}` has no terms", query.id)));
        }
        let mut terms: Vec<QueryTerm> = Vec::new();
        let mut sequence = Vec::with_capacity(query.len());
        for t in query.terms() {
            let slot = match terms.iter().position(|q| q.term == t) {
                Some(i) => i,
                None => {
                    let id = index.term_id(t).filter(|&id| index.cf(id) > 0);
                    terms.push(QueryTerm {
                        term: t.to_string(),
                        id,
                        qtf: 0,
                        cf: id.map_or(0, |id| index.cf(id)),
                        df: id.map_or(0, |id| index.df(id)),
                    });
                    terms.len() - 1
                }
            };
            terms[slot].qtf += 1;
            sequence.push(slot);
        }

        let mut diagnostics = QueryDiagnostics {
            unknown_terms: terms
                .iter()
                .filter(|t| t.id.is_none())
                .map(|t| t.term.clone())
                .collect(),
            skipped_unigrams: sequence.iter().filter(|&&i| terms[i].id.is_none()).count(),
            ..Default::default()
        };

        let mut pairs = Vec::new();
        if with_pairs {
            for seg in &query.segments {
                for w in seg.windows(2) {
                    let (a, b) = (index.term_id(&w[0]), index.term_id(&w[1]));
                    let (ordered_cf, window_cf) = match (a, b) {
                        (Some(a), Some(b)) => (
                            index.collection_ordered_count(a, b),
                            index.collection_window_count(a, b, DEFAULT_WINDOW),
                        ),
                        _ => (0, 0),
                    };
                    diagnostics.skipped_ordered += usize::from(ordered_cf == 0);
                    diagnostics.skipped_window += usize::from(window_cf == 0);
                    if let (Some(first), Some(second)) = (a, b) {
                        pairs.push(QueryPair {
                            first,
                            second,
                            ordered_cf,
                            window_cf,
                        });
                    }
                }
            }
        }

        Ok(PreparedQuery {
            id: query.id.clone(),
            len: query.len(),
            terms,
            sequence,
            pairs,
            diagnostics,
        })
    }

    fn known(&self) -> impl Iterator<Item = (&QueryTerm, TermId)> {
        self.terms.iter().filter_map(|t| t.id.map(|id| (t, id)))
    }
}

/// A scored document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub doc_id: String,
    pub score: f64,
}

/// A validated [`ScoringConfig`] bound to the statistics of one collection.
#[derive(Debug, Clone)]
pub struct Scorer {
    config: ScoringConfig,
    model: Model,
    num_docs: f64,
    coll_len: f64,
    avgl: f64,
    avgs: f64,
}

impl Scorer {
    pub fn new(config: ScoringConfig, index: &PositionalIndex) -> Result<Self> {
        config.validate()?;
        let stats = index.stats();
        let mut model = config.model;
        let mut avgs = f64::NAN;
        if let Some(vn) = config.vn {
            if vn.k_policy == KPolicy::AvgvRescale {
                let avgv = index
                    .avg_verbosity(vn.measure)
                    .ok_or_else(|| Error::Degenerate("avgv undefined on an empty collection".into()))?;
                model = rescale(model, avgv);
            }
            if matches!(model, Model::Okapi(_)) {
                avgs = index.avg_scope(vn.measure).unwrap_or(0.0);
                if avgs <= 0.0 {
                    return Err(Error::Degenerate(format!("average scope under {} is 0", vn.measure)));
                }
            }
        }
        let avgl = stats.avg_length.unwrap_or(0.0);
        if matches!(model, Model::Okapi(_)) && config.vn.is_none() && avgl <= 0.0 {
            return Err(Error::Degenerate("average document length is 0".into()));
        }
        Ok(Scorer {
            config,
            model,
            num_docs: stats.num_docs as f64,
            coll_len: stats.total_length as f64,
            avgl,
            avgs,
        })
    }

    pub fn config(&self) -> &ScoringConfig {
        &self.config
    }

    /// The model parameters actually used, after any avgv rescaling.
    pub fn effective_model(&self) -> Model {
        self.model
    }

    pub fn prepare(&self, query: &Query, index: &PositionalIndex) -> Result<PreparedQuery> {
        PreparedQuery::build(query, index, matches!(self.model, Model::Mrf(_)))
    }

    pub fn score<D: DocView + ?Sized>(&self, q: &PreparedQuery, d: &D) -> f64 {
        let shape = d.shape();
        match self.model {
            Model::Dp(p) => self.dp(q, d, &shape, p.mu),
            Model::Jm { lambda } => self.jm(q, d, &shape, lambda),
            Model::Okapi(p) => self.okapi(q, d, &shape, p),
            Model::Mrf(p) => self.mrf(q, d, &shape, p),
        }
    }

    fn p_coll(&self, t: &QueryTerm) -> f64 {
        t.cf as f64 / self.coll_len
    }

    fn dp<D: DocView + ?Sized>(&self, q: &PreparedQuery, d: &D, shape: &TermShape, mu: f64) -> f64 {
        let len = shape.length as f64;
        let (norm, x) = match self.config.vn {
            Some(vn) if shape.length > 0 => {
                let s = vn.measure.scope(shape);
                (s / len, s)
            }
            _ => (1.0, len),
        };
        let mut sum = 0.0;
        for (t, id) in q.known() {
            let c = d.tf(id);
            if c == 0 {
                continue;
            }
            let p = self.p_coll(t);
            let mut w = dp_match(c as f64, mu, p, norm);
            if let Some(delta) = self.config.delta {
                w += dp_lower_bound(delta, mu, p);
            }
            sum += t.qtf as f64 * w;
        }
        sum + dp_length_penalty(q.len as f64, x, mu)
    }

    fn jm<D: DocView + ?Sized>(&self, q: &PreparedQuery, d: &D, shape: &TermShape, lambda: f64) -> f64 {
        let len = shape.length as f64;
        let mut sum = 0.0;
        for (t, id) in q.known() {
            let c = d.tf(id);
            if c > 0 {
                sum += t.qtf as f64 * jm_match(c as f64, len, self.p_coll(t), lambda);
            }
        }
        sum
    }

    fn okapi<D: DocView + ?Sized>(&self, q: &PreparedQuery, d: &D, shape: &TermShape, p: OkapiParams) -> f64 {
        let len = shape.length as f64;
        let scope = self.config.vn.map(|vn| vn.measure.scope(shape));
        let mut sum = 0.0;
        for (t, id) in q.known() {
            let c = d.tf(id);
            if c == 0 {
                continue;
            }
            let c = c as f64;
            let mut tf = match scope {
                Some(s) => vn_bm25_tf(c, len, s, self.avgs, p.k1, p.b),
                None => bm25_tf(c, len, self.avgl, p.k1, p.b),
            };
            if let Some(delta) = self.config.delta {
                tf += delta;
            }
            sum += bm25_query_tf(t.qtf as f64, p.k3) * bm25_idf(self.num_docs, t.df as f64) * tf;
        }
        sum
    }

    fn mrf<D: DocView + ?Sized>(&self, q: &PreparedQuery, d: &D, shape: &TermShape, p: MrfParams) -> f64 {
        let len = shape.length as f64;
        let (scope, verbosity) = match self.config.vn {
            Some(vn) => (vn.measure.scope(shape), vn.measure.verbosity(shape)),
            None => (len, 1.0),
        };
        let vn = self.config.vn.is_some();
        let feature = |cnt: u32, coll: u64, mu: f64| {
            if vn {
                vn_mrf_feature(cnt as f64, coll as f64, self.coll_len, scope, verbosity, mu)
            } else {
                mrf_feature(cnt as f64, coll as f64, self.coll_len, len, mu)
            }
        };

        let mut f_t = 0.0;
        for &i in &q.sequence {
            let t = &q.terms[i];
            if let Some(id) = t.id {
                f_t += feature(d.tf(id), t.cf, p.mu_t);
            }
        }
        let mut f_o = 0.0;
        let mut f_u = 0.0;
        for pair in &q.pairs {
            if p.lambda_o > 0.0 && pair.ordered_cf > 0 {
                f_o += feature(d.ordered(pair.first, pair.second), pair.ordered_cf, p.mu_o);
            }
            if p.lambda_u > 0.0 && pair.window_cf > 0 {
                f_u += feature(
                    d.window(pair.first, pair.second, DEFAULT_WINDOW),
                    pair.window_cf,
                    p.mu_u,
                );
            }
        }
        p.lambda_t * f_t + p.lambda_o * f_o + p.lambda_u * f_u
    }

    /// Scores every document that contains at least one known query term
    /// and returns the best `k`, ties broken by ascending document id.
    pub fn search(&self, index: &PositionalIndex, q: &PreparedQuery, k: usize) -> Result<Vec<Hit>> {
        if k == 0 {
            return Err(Error::Config("top-k cutoff must be at least 1".into()));
        }
        let mut candidates: Vec<DocNum> = q
            .known()
            .flat_map(|(_, id)| index.postings(id).iter().map(|p| p.doc))
            .collect();
        candidates.sort_unstable();
        candidates.dedup();

        let mut scored: Vec<(DocNum, f64)> = candidates
            .into_iter()
            .map(|num| (num, self.score(q, &IndexedDoc { index, num })))
            .collect();
        // Documents are stored sorted by id, so doc number order is id order.
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(scored
            .into_iter()
            .map(|(num, score)| Hit {
                doc_id: index.document(num).id.clone(),
                score,
            })
            .collect())
    }
}

/// k1 ← k1/avgv and μ ← μ/avgv; everything else unchanged.
pub fn rescale(model: Model, avgv: f64) -> Model {
    match model {
        Model::Dp(p) => Model::Dp(DpParams { mu: p.mu / avgv }),
        Model::Okapi(p) => Model::Okapi(OkapiParams { k1: p.k1 / avgv, ..p }),
        Model::Mrf(p) => Model::Mrf(p.scaled(avgv)),
        jm @ Model::Jm { .. } => jm,
    }
}

/// Scores one indexed document by id.
pub fn score_document(config: ScoringConfig, query: &Query, index: &PositionalIndex, doc_id: &str) -> Result<f64> {
    let scorer = Scorer::new(config, index)?;
    let num = index
        .doc_num(doc_id)
        .ok_or_else(|| Error::UnknownDoc(doc_id.to_string()))?;
    let q = scorer.prepare(query, index)?;
    Ok(scorer.score(&q, &IndexedDoc { index, num }))
}

/// Top-k retrieval for a single query.
pub fn search_topk(query: &Query, index: &PositionalIndex, config: ScoringConfig, k: usize) -> Result<Vec<Hit>> {
    let scorer = Scorer::new(config, index)?;
    let q = scorer.prepare(query, index)?;
    scorer.search(index, &q, k)
}

#[cfg(test)]
mod tests;
