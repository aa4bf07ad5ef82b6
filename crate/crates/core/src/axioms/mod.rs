//! Axiomatic test bench: perturbation operators, V/S-type classification,
//! the conditions C1–C6 and A1, and the length normalization constraints.
//!
//! All checks use single-word queries against fixed collection statistics;
//! perturbed documents are scored as free-standing token sequences and are
//! not added to the collection.

mod bench;
mod conditions;
mod operators;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bench::{
    behavior_matrix, run_bench, synthetic_collection, AxiomBench, AxiomReport, BehaviorCell, BenchConfig, Cell,
    Counterexample, Recipe, Rejected, SyntheticSpec,
};
pub use conditions::{a1_dp, a1_okapi, eval_condition, CondResult, Condition, ConditionContext};
pub use operators::{apply_pan, apply_par, apply_pls, classify, classify_shapes, TypeClassification};

use crate::error::{Error, Result};
use crate::index::{PositionalIndex, TermId};
use crate::scope::{ScopeMeasure, TermShape};
use crate::scoring::{PreparedQuery, Query, Scorer, TokenDoc};

/// Absolute tolerance for score equality.
pub const SCORE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PerturbationKind {
    Pan,
    Pls,
    Par,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Constraint {
    #[serde(rename = "LNC1")]
    Lnc1,
    #[serde(rename = "LNC2")]
    Lnc2,
    #[serde(rename = "TF-LNC")]
    TfLnc,
    #[serde(rename = "H1-LNC")]
    H1Lnc,
    #[serde(rename = "H2-LNC")]
    H2Lnc,
}

impl Constraint {
    pub fn kind(self) -> PerturbationKind {
        match self {
            Constraint::Lnc1 | Constraint::H1Lnc => PerturbationKind::Pan,
            Constraint::Lnc2 | Constraint::H2Lnc => PerturbationKind::Pls,
            Constraint::TfLnc => PerturbationKind::Par,
        }
    }

    /// Whether a score change `f(ψ(d)) − f(d)` satisfies the constraint.
    pub fn holds(self, delta: f64) -> bool {
        match self {
            // f(d1) ≥ f(d2), d2 = ψ(d1)
            Constraint::Lnc1 => delta <= SCORE_TOL,
            // f(d1) ≤ f(d2), d2 = ψ(d1)
            Constraint::H1Lnc => delta >= -SCORE_TOL,
            // f(d1) ≥ f(d2), d1 = ψ(d2)
            Constraint::Lnc2 => delta >= -SCORE_TOL,
            // f(d1) ≤ f(d2), d1 = ψ(d2)
            Constraint::H2Lnc => delta <= SCORE_TOL,
            // f(d1) > f(d2), d1 = ψ(d2)
            Constraint::TfLnc => delta > SCORE_TOL,
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constraint::Lnc1 => "LNC1",
            Constraint::Lnc2 => "LNC2",
            Constraint::TfLnc => "TF-LNC",
            Constraint::H1Lnc => "H1-LNC",
            Constraint::H2Lnc => "H2-LNC",
        })
    }
}

impl FromStr for Constraint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "LNC1" => Constraint::Lnc1,
            "LNC2" => Constraint::Lnc2,
            "TF-LNC" | "TFLNC" => Constraint::TfLnc,
            "H1-LNC" | "H1" => Constraint::H1Lnc,
            "H2-LNC" | "H2" => Constraint::H2Lnc,
            _ => return Err(Error::Config(format!("unknown constraint `{s}`"))),
        })
    }
}

/// A document before and after one perturbation, for the single query word `term`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRecord {
    pub kind: PerturbationKind,
    pub k: u32,
    pub term: TermId,
    pub original: Vec<TermId>,
    pub perturbed: Vec<TermId>,
    /// Seed of the PLS replacement draw.
    pub rng_seed: Option<u64>,
}

impl PerturbationRecord {
    fn count(doc: &[TermId], t: TermId) -> u32 {
        doc.iter().filter(|&&x| x == t).count() as u32
    }

    pub fn c_original(&self) -> u32 {
        Self::count(&self.original, self.term)
    }

    pub fn c_perturbed(&self) -> u32 {
        Self::count(&self.perturbed, self.term)
    }

    /// The count identities each operator guarantees.
    pub fn postconditions_hold(&self) -> bool {
        let (lo, lp) = (self.original.len(), self.perturbed.len());
        let (co, cp) = (self.c_original(), self.c_perturbed());
        let k = self.k as usize;
        match self.kind {
            PerturbationKind::Pan => lp == lo + k && cp == co,
            PerturbationKind::Pls => lp == k * lo && cp as usize == k * co as usize,
            PerturbationKind::Par => lp == lo + k && cp as usize == co as usize + k,
        }
    }

    pub fn shapes(&self) -> (TermShape, TermShape) {
        (TermShape::of(&self.original), TermShape::of(&self.perturbed))
    }

    pub fn classify(&self, m: ScopeMeasure) -> TypeClassification {
        classify(&self.original, &self.perturbed, m)
    }

    /// Condition context with the constraint's d1/d2 roles filled in.
    pub fn context(&self, index: &PositionalIndex, measure: ScopeMeasure) -> ConditionContext {
        let (orig, pert) = self.shapes();
        let (co, cp) = (self.c_original(), self.c_perturbed());
        let ((d1, c1), (d2, c2)) = match self.kind {
            PerturbationKind::Pan => ((orig, co), (pert, cp)),
            PerturbationKind::Pls | PerturbationKind::Par => ((pert, cp), (orig, co)),
        };
        let stats = index.stats();
        ConditionContext {
            d1,
            d2,
            c1,
            c2,
            k: self.k,
            measure,
            original: orig,
            c_original: co,
            cf: index.cf(self.term),
            coll_len: stats.total_length,
            df: index.df(self.term),
            num_docs: stats.num_docs,
            b: None,
            avgs: None,
            mu: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintOutcome {
    pub holds: bool,
    /// f(ψ(d), q) − f(d, q).
    pub score_delta: f64,
}

/// Prepared single-word query for a record's term.
pub fn record_query(index: &PositionalIndex, term: TermId) -> Result<PreparedQuery> {
    let name = index
        .vocabulary()
        .term(term)
        .ok_or_else(|| Error::Precondition(format!("term id {} is not in the vocabulary", term.0)))?;
    PreparedQuery::new(&Query::new("w", [name]), index)
}

/// Scores both documents of `record` and evaluates `constraint`. H1-LNC
/// needs an S-type and H2-LNC a V-type classification.
pub fn check_constraint(
    constraint: Constraint,
    scorer: &Scorer,
    query: &PreparedQuery,
    record: &PerturbationRecord,
    types: Option<TypeClassification>,
) -> Result<ConstraintOutcome> {
    if constraint.kind() != record.kind {
        return Err(Error::Precondition(format!(
            "{constraint} needs a {:?} record, got {:?}",
            constraint.kind(),
            record.kind
        )));
    }
    match constraint {
        Constraint::H1Lnc if !types.is_some_and(|t| t.s_type) => {
            return Err(Error::Precondition("H1-LNC needs an S-type PAN record".into()))
        }
        Constraint::H2Lnc if !types.is_some_and(|t| t.v_type) => {
            return Err(Error::Precondition("H2-LNC needs a V-type PLS record".into()))
        }
        _ => {}
    }
    let delta = score_delta(scorer, query, record);
    Ok(ConstraintOutcome {
        holds: constraint.holds(delta),
        score_delta: delta,
    })
}

pub(crate) fn score_delta(scorer: &Scorer, query: &PreparedQuery, record: &PerturbationRecord) -> f64 {
    let before = scorer.score(query, &TokenDoc::new(&record.original));
    let after = scorer.score(query, &TokenDoc::new(&record.perturbed));
    after - before
}

/// Coverage of A1 and of C4 (under EntropyPower) over query words.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct A1Coverage {
    /// (w, d) pairs with c(w,d) ≥ 1 and c(w,d) ≥ |d|·p(w|C).
    pub dp_satisfied: u64,
    pub dp_pairs: u64,
    /// Query words with df(w) ≤ N/2.
    pub okapi_satisfied: u64,
    pub okapi_terms: u64,
    /// (w, d) pairs with h(d) ≤ (|d|/c(w,d))².
    pub c4_satisfied: u64,
    pub c4_pairs: u64,
}

fn pct(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

impl A1Coverage {
    pub fn dp_pct(&self) -> f64 {
        pct(self.dp_satisfied, self.dp_pairs)
    }

    pub fn okapi_pct(&self) -> f64 {
        pct(self.okapi_satisfied, self.okapi_terms)
    }

    pub fn c4_pct(&self) -> f64 {
        pct(self.c4_satisfied, self.c4_pairs)
    }
}

/// A1 coverage over the distinct in-vocabulary words of each query.
pub fn a1_coverage(index: &PositionalIndex, queries: &[Query]) -> Result<A1Coverage> {
    if queries.is_empty() {
        return Err(Error::Precondition("A1 coverage needs at least one query".into()));
    }
    let stats = index.stats();
    let mut out = A1Coverage::default();
    for q in queries {
        let mut seen: Vec<TermId> = Vec::new();
        for t in q.terms() {
            let Some(id) = index.term_id(t).filter(|&id| index.cf(id) > 0) else {
                continue;
            };
            if seen.contains(&id) {
                continue;
            }
            seen.push(id);
            out.okapi_terms += 1;
            out.okapi_satisfied += u64::from(a1_okapi(index.df(id), stats.num_docs));
            let cf = index.cf(id);
            for p in index.postings(id) {
                let c = p.positions.len() as u32;
                let shape = index.shape(p.doc);
                out.dp_pairs += 1;
                out.dp_satisfied += u64::from(a1_dp(c, shape.length, cf, stats.total_length));
                let r = shape.length as f64 / c as f64;
                out.c4_pairs += 1;
                out.c4_satisfied += u64::from(ScopeMeasure::EntropyPower.scope(shape) <= r * r);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
