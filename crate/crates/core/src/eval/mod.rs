//! TREC judgment and run files, AP / MAP / P@k and the paired t-test.

mod trec;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

pub use trec::{format_score, Qrels, RankedDoc, Run};

use crate::error::{Error, Result};

/// AP of one ranking. `None` when the query has no relevant documents.
pub fn average_precision(ranking: &[RankedDoc], qrels: &Qrels, qid: &str) -> Option<f64> {
    let r = qrels.num_relevant(qid);
    if r == 0 {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, d) in ranking.iter().enumerate() {
        if qrels.is_relevant(qid, &d.doc_id) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Some(sum / r as f64)
}

/// Relevant documents among the first `k`, over `k`.
pub fn precision_at(ranking: &[RankedDoc], qrels: &Qrels, qid: &str, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Precondition("P@k needs k >= 1".into()));
    }
    let rel = ranking
        .iter()
        .take(k)
        .filter(|d| qrels.is_relevant(qid, &d.doc_id))
        .count();
    Ok(rel as f64 / k as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryEval {
    pub qid: String,
    pub num_rel: usize,
    pub retrieved: usize,
    pub ap: f64,
    pub p_at_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub k: usize,
    pub per_query: Vec<QueryEval>,
    pub map: f64,
    pub mean_p_at_k: f64,
    /// Judged queries with no relevant document, left out of the means.
    pub excluded: Vec<String>,
}

impl Evaluation {
    pub fn ap_vector(&self) -> Vec<(String, f64)> {
        self.per_query.iter().map(|q| (q.qid.clone(), q.ap)).collect()
    }

    pub fn p_at_k_vector(&self) -> Vec<(String, f64)> {
        self.per_query.iter().map(|q| (q.qid.clone(), q.p_at_k)).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for q in &self.per_query {
            out.push_str(&format!("map\t{}\t{:.4}\n", q.qid, q.ap));
            out.push_str(&format!("P_{}\t{}\t{:.4}\n", self.k, q.qid, q.p_at_k));
        }
        out.push_str(&format!("num_q\tall\t{}\n", self.per_query.len()));
        out.push_str(&format!("map\tall\t{:.4}\n", self.map));
        out.push_str(&format!("P_{}\tall\t{:.4}\n", self.k, self.mean_p_at_k));
        out
    }
}

/// Per-query AP and P@k over every judged query with at least one relevant
/// document. Such queries missing from the run score 0.
pub fn evaluate(run: &Run, qrels: &Qrels, k: usize) -> Result<Evaluation> {
    if k == 0 {
        return Err(Error::Precondition("P@k needs k >= 1".into()));
    }
    let mut per_query = Vec::new();
    let mut excluded = Vec::new();
    for qid in qrels.queries() {
        let ranking = run.ranking(qid);
        let Some(ap) = average_precision(ranking, qrels, qid) else {
            excluded.push(qid.to_string());
            continue;
        };
        per_query.push(QueryEval {
            qid: qid.to_string(),
            num_rel: qrels.num_relevant(qid),
            retrieved: ranking.len(),
            ap,
            p_at_k: precision_at(ranking, qrels, qid, k)?,
        });
    }
    if per_query.is_empty() {
        return Err(Error::NoEvaluableQueries);
    }
    let n = per_query.len() as f64;
    Ok(Evaluation {
        k,
        map: per_query.iter().map(|q| q.ap).sum::<f64>() / n,
        mean_p_at_k: per_query.iter().map(|q| q.p_at_k).sum::<f64>() / n,
        per_query,
        excluded,
    })
}

pub fn mean_average_precision(run: &Run, qrels: &Qrels) -> Result<f64> {
    evaluate(run, qrels, 5).map(|e| e.map)
}

/// cdf of Student's t with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df).expect("df > 0").cdf(t)
}

/// Two-sided p-value of |T| ≥ |t|.
pub fn two_sided_p(t: f64, df: f64) -> f64 {
    (2.0 * student_t_cdf(-t.abs(), df)).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub n: usize,
    pub mean_diff: f64,
    /// `None` when every difference is the same.
    pub t: Option<f64>,
    pub df: f64,
    pub p_two_sided: Option<f64>,
    pub significant_95: bool,
    pub degenerate: bool,
}

/// Paired t-test on `a − b`, sample standard deviation, two-sided.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::Precondition(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::Precondition("paired t-test needs n >= 2".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let df = (n - 1) as f64;
    if diffs.iter().all(|&d| d == diffs[0]) {
        return Ok(TTest {
            n,
            mean_diff: mean,
            t: None,
            df,
            p_two_sided: None,
            significant_95: false,
            degenerate: true,
        });
    }
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / df;
    let t = mean / (var.sqrt() / (n as f64).sqrt());
    let p = two_sided_p(t, df);
    Ok(TTest {
        n,
        mean_diff: mean,
        t: Some(t),
        df,
        p_two_sided: Some(p),
        significant_95: p < 0.05,
        degenerate: false,
    })
}

/// Paired t-test on two per-query vectors keyed by query id (a − b).
pub fn compare_per_query(a: &[(String, f64)], b: &[(String, f64)]) -> Result<TTest> {
    let a: std::collections::BTreeMap<&str, f64> = a.iter().map(|(q, v)| (q.as_str(), *v)).collect();
    let b: std::collections::BTreeMap<&str, f64> = b.iter().map(|(q, v)| (q.as_str(), *v)).collect();
    if let Some(q) = a
        .keys()
        .find(|q| !b.contains_key(*q))
        .or_else(|| b.keys().find(|q| !a.contains_key(*q)))
    {
        return Err(Error::QueryMismatch(format!("query `{q}` is scored by only one side")));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = a.iter().map(|(q, v)| (*v, b[q])).unzip();
    paired_t_test(&x, &y)
}
