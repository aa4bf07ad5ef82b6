//! Grid search with k-fold cross-validation over topic sets.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{average_precision, compare_per_query, precision_at, Qrels, RankedDoc, TTest};
use crate::index::PositionalIndex;
use crate::scope::ScopeMeasure;
use crate::scoring::{
    rescale, DpParams, KPolicy, Model, MrfParams, OkapiParams, Query, Scorer, ScoringConfig, VnConfig,
};

/// Per-parameter search spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub mu: Vec<f64>,
    pub b: Vec<f64>,
    pub k1: Vec<f64>,
    pub k3: f64,
    pub delta_dp: Vec<f64>,
    pub delta_okapi: Vec<f64>,
    pub beta: Vec<f64>,
    /// MRF (λ_T, λ_O, λ_U) candidates.
    pub lambdas: Vec<[f64; 3]>,
}

pub const MU_GRID: [f64; 18] = [
    100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 800.0, 1000.0, 1500.0, 2000.0, 2500.0, 3000.0, 4000.0, 5000.0, 7000.0,
    10000.0, 15000.0, 20000.0,
];
pub const B_GRID: [f64; 18] = [
    0.0, 0.001, 0.003, 0.005, 0.007, 0.01, 0.02, 0.03, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9,
];
pub const K1_GRID: [f64; 13] = [0.25, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0, 1.2, 1.5, 1.8, 2.0, 2.5, 3.0];
pub const BETA_GRID: [f64; 4] = [0.25, 0.5, 0.75, 0.9];

impl Default for ParamGrid {
    fn default() -> Self {
        ParamGrid {
            mu: MU_GRID.to_vec(),
            b: B_GRID.to_vec(),
            k1: K1_GRID.to_vec(),
            k3: 1000.0,
            delta_dp: (0..=15).map(|i| i as f64 / 100.0).collect(),
            delta_okapi: (0..=15).map(|i| i as f64 / 10.0).collect(),
            beta: BETA_GRID.to_vec(),
            lambdas: vec![MrfParams::DEFAULT_LAMBDAS],
        }
    }
}

impl ParamGrid {
    /// Replaces the MRF λ list with the simplex points at resolution `step`.
    pub fn with_lambda_simplex(mut self, step: f64) -> Result<Self> {
        if !(step > 0.0 && step <= 1.0) {
            return Err(Error::Config(format!("simplex step must be in (0, 1], got {step}")));
        }
        let n = (1.0 / step).round() as u32;
        if ((n as f64) * step - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("simplex step {step} does not divide 1")));
        }
        self.lambdas = (0..=n)
            .flat_map(|i| (0..=n - i).map(move |j| (i, j)))
            .map(|(i, j)| [i as f64 / n as f64, j as f64 / n as f64, (n - i - j) as f64 / n as f64])
            .collect();
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Dp,
    Okapi,
    Mrf,
}

/// Scope measure of a VN method; LengthPower with `None` tunes β over the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScopeChoice {
    UniqLength,
    EntropyPower,
    LengthPower(Option<f64>),
}

/// What gets tuned: a model family, optionally VN, optionally lower-bounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Method {
    pub family: Family,
    pub scope: Option<ScopeChoice>,
    pub lower_bound: bool,
    /// Divide k1/μ by avgv under LengthPower.
    pub rescale: bool,
}

impl Method {
    pub fn new(family: Family) -> Self {
        Method {
            family,
            scope: None,
            lower_bound: false,
            rescale: true,
        }
    }

    pub fn vn(mut self, scope: ScopeChoice) -> Self {
        self.scope = Some(scope);
        self
    }

    pub fn lower_bounded(mut self) -> Self {
        self.lower_bound = true;
        self
    }

    pub fn label(&self) -> String {
        let base = match self.family {
            Family::Dp => "DP",
            Family::Okapi => "Okapi",
            Family::Mrf => "MRF",
        };
        let mut s = String::new();
        if self.scope.is_some() {
            s.push_str("VN-");
        }
        s.push_str(base);
        if self.lower_bound {
            s.push('+');
        }
        match self.scope {
            Some(ScopeChoice::UniqLength) => s.push_str(" uniqlength"),
            Some(ScopeChoice::EntropyPower) => s.push_str(" entropypower"),
            Some(ScopeChoice::LengthPower(Some(b))) => {
                let _ = write!(s, " lengthpower:{b}");
            }
            Some(ScopeChoice::LengthPower(None)) => s.push_str(" lengthpower"),
            None => {}
        }
        s
    }

    /// Every grid point of this method, sorted by (μ, b, k1, δ, β, λ).
    pub fn points(&self, grid: &ParamGrid) -> Result<Vec<GridPoint>> {
        if self.lower_bound && self.family == Family::Mrf {
            return Err(Error::Config("MRF has no lower-bounded variant".into()));
        }
        let one = |v: &[f64]| -> Vec<Option<f64>> { v.iter().map(|&x| Some(x)).collect() };
        let none = vec![None];
        let (mus, bs, k1s, lambdas) = match self.family {
            Family::Dp => (one(&grid.mu), none.clone(), none.clone(), vec![None]),
            Family::Okapi => (none.clone(), one(&grid.b), one(&grid.k1), vec![None]),
            Family::Mrf => (
                one(&grid.mu),
                none.clone(),
                none.clone(),
                grid.lambdas.iter().map(|&l| Some(l)).collect(),
            ),
        };
        let deltas = match (self.lower_bound, self.family) {
            (false, _) => none.clone(),
            (true, Family::Okapi) => one(&grid.delta_okapi),
            (true, _) => one(&grid.delta_dp),
        };
        let betas = match self.scope {
            Some(ScopeChoice::LengthPower(None)) => one(&grid.beta),
            _ => none.clone(),
        };
        let mut out = Vec::new();
        for &mu in &mus {
            for &b in &bs {
                for &k1 in &k1s {
                    for &delta in &deltas {
                        for &beta in &betas {
                            for &l in &lambdas {
                                out.push(GridPoint {
                                    mu,
                                    b,
                                    k1,
                                    k3: (self.family == Family::Okapi).then_some(grid.k3),
                                    delta,
                                    beta,
                                    lambdas: l,
                                });
                            }
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(Error::Config(format!("empty parameter grid for {}", self.label())));
        }
        out.sort_by(GridPoint::tie_order);
        Ok(out)
    }

    pub fn config(&self, p: &GridPoint) -> Result<ScoringConfig> {
        let get = |v: Option<f64>, name: &str| v.ok_or_else(|| Error::Config(format!("grid point lacks {name}")));
        let model = match self.family {
            Family::Dp => Model::Dp(DpParams { mu: get(p.mu, "mu")? }),
            Family::Okapi => Model::Okapi(OkapiParams {
                k1: get(p.k1, "k1")?,
                b: get(p.b, "b")?,
                k3: p.k3.unwrap_or(1000.0),
            }),
            Family::Mrf => Model::Mrf(MrfParams::new(
                p.lambdas.unwrap_or(MrfParams::DEFAULT_LAMBDAS),
                get(p.mu, "mu")?,
            )),
        };
        let vn = match self.scope {
            None => None,
            Some(ScopeChoice::UniqLength) => Some(VnConfig::new(ScopeMeasure::UniqLength)),
            Some(ScopeChoice::EntropyPower) => Some(VnConfig::new(ScopeMeasure::EntropyPower)),
            Some(ScopeChoice::LengthPower(fixed)) => {
                let beta = fixed
                    .or(p.beta)
                    .ok_or_else(|| Error::Config("grid point lacks beta".into()))?;
                Some(VnConfig {
                    measure: ScopeMeasure::length_power(beta)?,
                    k_policy: if self.rescale {
                        KPolicy::AvgvRescale
                    } else {
                        KPolicy::Unit
                    },
                })
            }
        };
        let config = ScoringConfig {
            model,
            vn,
            delta: p.delta,
        };
        config.validate()?;
        Ok(config)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<[f64; 3]>,
}

impl GridPoint {
    fn key(&self) -> [f64; 8] {
        let l = self.lambdas.unwrap_or([0.0; 3]);
        let z = |v: Option<f64>| v.unwrap_or(0.0);
        [
            z(self.mu),
            z(self.b),
            z(self.k1),
            z(self.delta),
            z(self.beta),
            l[0],
            l[1],
            l[2],
        ]
    }

    /// Total order used to break ties: μ, then b, k1, δ, β, λ.
    pub fn tie_order(a: &GridPoint, b: &GridPoint) -> Ordering {
        a.key()
            .iter()
            .zip(b.key().iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (name, v) in [
            ("mu", self.mu),
            ("b", self.b),
            ("k1", self.k1),
            ("delta", self.delta),
            ("beta", self.beta),
        ] {
            if let Some(v) = v {
                parts.push(format!("{name}={v}"));
            }
        }
        if let Some(l) = self.lambdas {
            parts.push(format!("lambdas={},{},{}", l[0], l[1], l[2]));
        }
        f.write_str(&parts.join(" "))
    }
}

/// Divides k1 and μ by `avgv` for a LengthPower VN config. Other scope
/// measures are returned unchanged along with a warning.
pub fn scale_for_lengthpower(config: ScoringConfig, avgv: f64) -> Result<(ScoringConfig, Option<String>)> {
    if !(avgv > 0.0 && avgv.is_finite()) {
        return Err(Error::Precondition(format!("avgv must be positive, got {avgv}")));
    }
    match config.vn {
        Some(vn) if vn.measure.is_length_power() => Ok((
            ScoringConfig {
                model: rescale(config.model, avgv),
                ..config
            },
            None,
        )),
        _ => Ok((
            config,
            Some(format!(
                "parameter scaling applies only to LengthPower; {} left unchanged",
                config.label()
            )),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "map")]
    Map,
    #[serde(rename = "p@5")]
    P5,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "map" => Ok(Metric::Map),
            "p@5" | "p5" | "p_5" => Ok(Metric::P5),
            _ => Err(Error::Config(format!("unknown metric `{s}` (map, p@5)"))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Map => "MAP",
            Metric::P5 => "P@5",
        })
    }
}

/// Named test sets of query ids; each fold trains on the union of the others.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FoldPlan {
    folds: BTreeMap<String, Vec<String>>,
}

impl FoldPlan {
    pub fn new(folds: BTreeMap<String, Vec<String>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (name, qids) in &folds {
            if qids.is_empty() {
                return Err(Error::Config(format!("fold `{name}` has no queries")));
            }
            for q in qids {
                if !seen.insert(q.as_str()) {
                    return Err(Error::Config(format!("query `{q}` appears in more than one test set")));
                }
            }
        }
        if folds.is_empty() {
            return Err(Error::Config("fold plan is empty".into()));
        }
        Ok(FoldPlan { folds })
    }

    /// Round-robin split of `qids` into `k` folds named `f1…fk`.
    pub fn round_robin(qids: &[String], k: usize) -> Result<Self> {
        if k == 0 || k > qids.len() {
            return Err(Error::Config(format!(
                "cannot split {} queries into {k} folds",
                qids.len()
            )));
        }
        let mut folds: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (i, q) in qids.iter().enumerate() {
            folds.entry(format!("f{}", i % k + 1)).or_default().push(q.clone());
        }
        Self::new(folds)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let folds: BTreeMap<String, Vec<String>> =
            serde_json::from_str(text).map_err(|e| Error::parse("fold plan", e.line(), e.to_string()))?;
        Self::new(folds)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let folds: BTreeMap<String, Vec<String>> = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), e.line(), e.to_string()))?;
        Self::new(folds)
    }

    pub fn folds(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.folds.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn training(&self, fold: &str) -> Vec<&str> {
        self.folds
            .iter()
            .filter(|(name, _)| name.as_str() != fold)
            .flat_map(|(_, q)| q.iter().map(String::as_str))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub topk: usize,
    /// Cutoff of the precision metric.
    pub k: usize,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions { topk: 1000, k: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicScore {
    pub qid: String,
    pub fold: String,
    pub ap: f64,
    pub p_at_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: String,
    pub best: GridPoint,
    pub config: ScoringConfig,
    pub train_score: f64,
    pub test_map: f64,
    pub test_p_at_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub method: String,
    pub metric: Metric,
    pub points_evaluated: usize,
    pub folds: Vec<FoldResult>,
    /// Held-out scores, one per query, sorted by query id.
    pub per_topic: Vec<TopicScore>,
    pub map: f64,
    pub mean_p_at_k: f64,
}

impl CvResult {
    pub fn vector(&self, metric: Metric) -> Vec<(String, f64)> {
        self.per_topic
            .iter()
            .map(|t| (t.qid.clone(), if metric == Metric::Map { t.ap } else { t.p_at_k }))
            .collect()
    }
}

/// AP and P@k of every query for one configuration.
pub fn evaluate_config(
    index: &PositionalIndex,
    queries: &[Query],
    qrels: &Qrels,
    config: ScoringConfig,
    opts: CvOptions,
) -> Result<Vec<(f64, f64)>> {
    let scorer = Scorer::new(config, index)?;
    queries
        .iter()
        .map(|q| {
            let prepared = scorer.prepare(q, index)?;
            let ranking: Vec<RankedDoc> = scorer
                .search(index, &prepared, opts.topk)?
                .into_iter()
                .map(|h| RankedDoc {
                    doc_id: h.doc_id,
                    score: h.score,
                })
                .collect();
            let ap = average_precision(&ranking, qrels, &q.id)
                .ok_or_else(|| Error::Precondition(format!("query `{}` has no relevant documents", q.id)))?;
            Ok((ap, precision_at(&ranking, qrels, &q.id, opts.k)?))
        })
        .collect()
}

fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = v.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

#[allow(clippy::too_many_arguments)]
/// Tunes `method` on each fold's training queries and scores the held-out
/// queries with the selected point.
pub fn cross_validate(
    index: &PositionalIndex,
    queries: &[Query],
    qrels: &Qrels,
    method: Method,
    grid: &ParamGrid,
    folds: &FoldPlan,
    metric: Metric,
    opts: CvOptions,
) -> Result<CvResult> {
    let pos: BTreeMap<&str, usize> = queries.iter().enumerate().map(|(i, q)| (q.id.as_str(), i)).collect();
    if pos.len() != queries.len() {
        return Err(Error::Precondition("query ids are not unique".into()));
    }
    let mut covered = BTreeSet::new();
    for (name, qids) in folds.folds() {
        for q in qids {
            if !pos.contains_key(q.as_str()) {
                return Err(Error::Precondition(format!("fold `{name}` names unknown query `{q}`")));
            }
            covered.insert(q.as_str());
        }
        if folds.training(name).is_empty() {
            return Err(Error::Precondition(format!("fold `{name}` has no training queries")));
        }
    }
    if let Some(q) = queries.iter().find(|q| !covered.contains(q.id.as_str())) {
        return Err(Error::Precondition(format!("query `{}` is in no test set", q.id)));
    }
    if let Some(q) = queries.iter().find(|q| qrels.num_relevant(&q.id) == 0) {
        return Err(Error::Precondition(format!(
            "query `{}` has no relevant documents",
            q.id
        )));
    }

    let points = method.points(grid)?;
    let configs = points.iter().map(|p| method.config(p)).collect::<Result<Vec<_>>>()?;
    let table: Vec<Vec<(f64, f64)>> = configs
        .par_iter()
        .map(|&c| evaluate_config(index, queries, qrels, c, opts))
        .collect::<Result<_>>()?;
    let value = |row: &[(f64, f64)], i: usize| if metric == Metric::Map { row[i].0 } else { row[i].1 };

    let mut fold_results = Vec::new();
    let mut per_topic = Vec::new();
    for (name, test) in folds.folds() {
        let train: Vec<usize> = folds.training(name).iter().map(|q| pos[q]).collect();
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (j, row) in table.iter().enumerate() {
            let s = mean(train.iter().map(|&i| value(row, i)));
            if s > best_score {
                best = j;
                best_score = s;
            }
        }
        let row = &table[best];
        let test_idx: Vec<usize> = test.iter().map(|q| pos[q.as_str()]).collect();
        for &i in &test_idx {
            per_topic.push(TopicScore {
                qid: queries[i].id.clone(),
                fold: name.to_string(),
                ap: row[i].0,
                p_at_k: row[i].1,
            });
        }
        fold_results.push(FoldResult {
            fold: name.to_string(),
            best: points[best],
            config: configs[best],
            train_score: best_score,
            test_map: mean(test_idx.iter().map(|&i| row[i].0)),
            test_p_at_k: mean(test_idx.iter().map(|&i| row[i].1)),
        });
    }
    per_topic.sort_by(|a, b| a.qid.cmp(&b.qid));
    Ok(CvResult {
        method: method.label(),
        metric,
        points_evaluated: points.len(),
        folds: fold_results,
        map: mean(per_topic.iter().map(|t| t.ap)),
        mean_p_at_k: mean(per_topic.iter().map(|t| t.p_at_k)),
        per_topic,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: String,
    pub method: String,
    pub metric: Metric,
    pub baseline_mean: f64,
    pub method_mean: f64,
    pub ttest: TTest,
}

/// Paired t-test of `method` against `baseline` on held-out per-topic scores.
pub fn compare_results(baseline: &CvResult, method: &CvResult, metric: Metric) -> Result<Comparison> {
    let (a, b) = (method.vector(metric), baseline.vector(metric));
    let ttest = compare_per_query(&a, &b)?;
    Ok(Comparison {
        baseline: baseline.method.clone(),
        method: method.method.clone(),
        metric,
        baseline_mean: mean(b.iter().map(|x| x.1)),
        method_mean: mean(a.iter().map(|x| x.1)),
        ttest,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub results: Vec<CvResult>,
    /// Every later result against the first, for MAP and P@5.
    pub comparisons: Vec<Comparison>,
}

pub fn tune_report(results: Vec<CvResult>) -> Result<TuneReport> {
    let mut comparisons = Vec::new();
    if let Some((base, rest)) = results.split_first() {
        for r in rest {
            comparisons.push(compare_results(base, r, Metric::Map)?);
            comparisons.push(compare_results(base, r, Metric::P5)?);
        }
    }
    Ok(TuneReport { results, comparisons })
}

impl TuneReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            let _ = writeln!(
                out,
                "{}  (selected by {}, {} grid points)  MAP {:.4}  P@5 {:.4}",
                r.method, r.metric, r.points_evaluated, r.map, r.mean_p_at_k
            );
            for f in &r.folds {
                let _ = writeln!(
                    out,
                    "  {:<12} {:<40} train {:.4}  test MAP {:.4}  P@5 {:.4}",
                    f.fold,
                    f.best.to_string(),
                    f.train_score,
                    f.test_map,
                    f.test_p_at_k
                );
            }
        }
        for c in &self.comparisons {
            let t = match (c.ttest.t, c.ttest.p_two_sided) {
                (Some(t), Some(p)) => format!("t={t:.4} p={p:.4}{}", if c.ttest.significant_95 { " *" } else { "" }),
                _ => "degenerate".to_string(),
            };
            let _ = writeln!(
                out,
                "{} vs {} {}: {:.4} vs {:.4}  {t}",
                c.method, c.baseline, c.metric, c.method_mean, c.baseline_mean
            );
        }
        out
    }
}
