use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    a1_coverage, apply_pan, apply_par, apply_pls, classify_shapes, eval_condition, record_query, score_delta,
    A1Coverage, CondResult, Condition, Constraint, PerturbationKind, PerturbationRecord, SCORE_TOL,
};
use crate::analysis::AnalyzerConfig;
use crate::error::{Error, Result};
use crate::index::{DocNum, PositionalIndex, TermId};
use crate::scope::ScopeMeasure;
use crate::scoring::{Model, PreparedQuery, Query, Scorer, ScoringConfig};

/// Shape of the generated test collection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_docs: u32,
    pub background: u32,
    pub planted: u32,
    pub min_len: u32,
    pub max_len: u32,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            num_docs: 300,
            background: 600,
            planted: 24,
            min_len: 12,
            max_len: 240,
        }
    }
}

/// Documents over a background vocabulary `t0000…`, each drawn from its own
/// random subset with a random Zipf skew, plus rare planted words `w00…`
/// that occur densely in a few documents.
pub fn synthetic_collection(spec: &SyntheticSpec, seed: u64) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let background: Vec<String> = (0..spec.background.max(2)).map(|i| format!("t{i:04}")).collect();
    let (lo, hi) = (spec.min_len.max(2) as f64, spec.max_len.max(spec.min_len.max(2)) as f64);
    let mut docs: Vec<Vec<String>> = (0..spec.num_docs)
        .map(|_| {
            let len = (lo * (hi / lo).powf(rng.gen::<f64>())).round() as usize;
            let width = rng.gen_range(2..=len.min(150).min(background.len()));
            let subset = rand::seq::index::sample(&mut rng, background.len(), width).into_vec();
            let skew: f64 = rng.gen_range(0.0..1.5);
            let weights: Vec<f64> = (1..=width).map(|r| (r as f64).powf(-skew)).collect();
            let pick = WeightedIndex::new(&weights).expect("positive weights");
            (0..len)
                .map(|_| background[subset[pick.sample(&mut rng)]].clone())
                .collect()
        })
        .collect();

    let n = spec.num_docs as usize;
    if n > 0 {
        for j in 0..spec.planted {
            let word = format!("w{j:02}");
            let df = rng.gen_range(1..=(n / 30).max(2).min(n));
            for d in rand::seq::index::sample(&mut rng, n, df) {
                let len = docs[d].len();
                let r = rng.gen_range((len / 40).max(1)..=(len / 5).max(1));
                for pos in rand::seq::index::sample(&mut rng, len, r) {
                    docs[d][pos] = word.clone();
                }
            }
        }
    }
    docs.into_iter()
        .enumerate()
        .map(|(i, toks)| (format!("s{i:04}"), toks.join(" ")))
        .collect()
}

/// How a record was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Recipe {
    /// K noise words already present in d.
    VPan,
    /// K fresh words never seen in d.
    SPan,
    /// Replacements from a single non-query word of d.
    VPls,
    /// Replacements from d's non-query words plus a large fresh pool.
    SPls,
    Par,
}

impl Recipe {
    pub fn kind(self) -> PerturbationKind {
        match self {
            Recipe::VPan | Recipe::SPan => PerturbationKind::Pan,
            Recipe::VPls | Recipe::SPls => PerturbationKind::Pls,
            Recipe::Par => PerturbationKind::Par,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Recipe::VPan => "V-PAN",
            Recipe::SPan => "S-PAN",
            Recipe::VPls => "V-PLS",
            Recipe::SPls => "S-PLS",
            Recipe::Par => "PAR",
        }
    }

    fn tag(self) -> u64 {
        match self {
            Recipe::VPan => 1,
            Recipe::SPan => 2,
            Recipe::VPls => 3,
            Recipe::SPls => 4,
            Recipe::Par => 5,
        }
    }

    fn wants_v(self) -> Option<bool> {
        match self {
            Recipe::VPan | Recipe::VPls => Some(true),
            Recipe::SPan | Recipe::SPls => Some(false),
            Recipe::Par => None,
        }
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn trial_seed(seed: u64, stream: u64, trial: u64) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ stream) ^ trial)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub seed: u64,
    /// Records generated per recipe; every asserted cell sees at least this many.
    pub records: usize,
    pub dp_mu: Vec<f64>,
    pub okapi: Vec<(f64, f64)>,
    pub betas: Vec<f64>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            seed: 0,
            records: 1000,
            dp_mu: vec![100.0, 500.0, 2000.0, 10000.0],
            okapi: vec![(1.2, 0.75), (0.5, 0.3), (2.5, 0.9), (0.25, 0.01)],
            betas: vec![0.0, 0.25, 0.5, 0.75, 0.9, 1.0],
        }
    }
}

impl BenchConfig {
    fn family(&self, okapi: bool) -> Vec<ScoringConfig> {
        if okapi {
            self.okapi.iter().map(|&(k1, b)| ScoringConfig::okapi(k1, b)).collect()
        } else {
            self.dp_mu.iter().map(|&mu| ScoringConfig::dp(mu)).collect()
        }
    }
}

/// A failing check, kept small enough to print.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub kind: PerturbationKind,
    pub k: u32,
    pub original_len: u32,
    pub perturbed_len: u32,
    pub c_original: u32,
    pub scope_original: f64,
    pub scope_perturbed: f64,
    pub params: String,
    pub expected_hold: bool,
    pub score_delta: f64,
}

/// One row of the constraint table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub suite: String,
    pub constraint: Constraint,
    pub model: String,
    pub measure: String,
    /// Which records count, e.g. `A1`, `C1`, `all`; `C2<=>` for cells that
    /// require the constraint to hold exactly when the condition does.
    pub filter: String,
    pub asserted: bool,
    pub records: u64,
    pub checks: u64,
    pub passed: u64,
    pub counterexample: Option<Counterexample>,
}

impl Cell {
    pub fn all_pass(&self) -> bool {
        self.passed == self.checks
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expectation {
    /// f(d) ≥ f(ψ(d)).
    Penalize,
    /// f(d) ≤ f(ψ(d)).
    Prefer,
    /// Prefer when C5/C6 holds, penalize otherwise.
    Gated,
}

/// One cell of the behaviour matrix (perturbation row × model column).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorCell {
    pub model: String,
    pub measure: String,
    pub row: String,
    pub expected: Expectation,
    pub constructed: bool,
    pub checks: u64,
    pub agree: u64,
    pub penalized: u64,
    pub preferred: u64,
    pub gated_true: u64,
    pub rejected: u64,
}

impl BehaviorCell {
    pub fn all_agree(&self) -> bool {
        self.agree == self.checks
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionInfo {
    pub num_docs: u32,
    pub total_length: u64,
    pub vocabulary: usize,
    pub candidate_pairs: usize,
}

/// (recipe, measure, rejected draws).
pub type Rejected = (String, String, u64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub seed: u64,
    pub records_per_recipe: usize,
    pub collection: CollectionInfo,
    /// Records whose classification contradicted their recipe, per measure.
    pub rejected: Vec<Rejected>,
    pub a1: A1Coverage,
    pub cells: Vec<Cell>,
    pub behavior: Vec<BehaviorCell>,
}

impl AxiomReport {
    pub fn all_asserted_pass(&self) -> bool {
        self.cells.iter().filter(|c| c.asserted).all(Cell::all_pass)
            && self.behavior.iter().all(BehaviorCell::all_agree)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "collection: {} docs, {} tokens, {} terms, {} (word, doc) candidates; seed {}",
            self.collection.num_docs,
            self.collection.total_length,
            self.collection.vocabulary,
            self.collection.candidate_pairs,
            self.seed
        );
        let _ = writeln!(
            out,
            "A1: c(w,d) >= |d|p(w|C) {:.2}%  df <= N/2 {:.2}%  C4 {:.2}%",
            self.a1.dp_pct(),
            self.a1.okapi_pct(),
            self.a1.c4_pct()
        );
        let _ = writeln!(
            out,
            "\n{:<12} {:<7} {:<10} {:<17} {:<7} {:>13}",
            "suite", "check", "model", "measure", "filter", "passed"
        );
        for c in &self.cells {
            let mark = match (c.asserted, c.all_pass()) {
                (false, _) => "  (info)",
                (true, true) => "",
                (true, false) => "  FAIL",
            };
            let _ = writeln!(
                out,
                "{:<12} {:<7} {:<10} {:<17} {:<7} {:>6}/{:<6}{mark}",
                c.suite,
                c.constraint.to_string(),
                c.model,
                c.measure,
                c.filter,
                c.passed,
                c.checks
            );
        }
        let _ = writeln!(
            out,
            "\n{:<10} {:<13} {:<18} {:<9} {:>13} {:>9} {:>9}",
            "model", "measure", "row", "expect", "agree", "penalize", "prefer"
        );
        for b in &self.behavior {
            let _ = writeln!(
                out,
                "{:<10} {:<13} {:<18} {:<9} {:>6}/{:<6} {:>9} {:>9}{}",
                b.model,
                b.measure,
                b.row,
                format!("{:?}", b.expected).to_lowercase(),
                b.agree,
                b.checks,
                b.penalized,
                b.preferred,
                if b.all_agree() { "" } else { "  FAIL" }
            );
        }
        out
    }
}

/// Record generator and checker over a fixed collection.
pub struct AxiomBench {
    index: PositionalIndex,
    /// (w, d) pairs with df(w) < N/2, c(w,d)/|d| > p(w|C) and at least one
    /// non-query token in d.
    candidates: Vec<(TermId, DocNum)>,
    queries: HashMap<TermId, PreparedQuery>,
    seed: u64,
}

impl AxiomBench {
    pub fn new(index: PositionalIndex, seed: u64) -> Result<Self> {
        let stats = index.stats().clone();
        let mut candidates = Vec::new();
        let mut queries = HashMap::new();
        for (i, _) in index.vocabulary().terms().iter().enumerate() {
            let t = TermId(i as u32);
            let (df, cf) = (index.df(t), index.cf(t));
            if 2 * df as u64 >= stats.num_docs as u64 {
                continue;
            }
            let mut any = false;
            for p in index.postings(t) {
                let c = p.positions.len() as u64;
                let len = index.shape(p.doc).length as u64;
                if c < len && c as u128 * stats.total_length as u128 > len as u128 * cf as u128 {
                    candidates.push((t, p.doc));
                    any = true;
                }
            }
            if any {
                queries.insert(t, record_query(&index, t)?);
            }
        }
        if candidates.is_empty() {
            return Err(Error::Degenerate(
                "no (word, document) pair satisfies A1 with df < N/2 and a non-query token".into(),
            ));
        }
        Ok(AxiomBench {
            index,
            candidates,
            queries,
            seed,
        })
    }

    pub fn synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Self> {
        let docs = synthetic_collection(spec, seed);
        Self::new(PositionalIndex::build(docs, AnalyzerConfig::default())?, seed)
    }

    pub fn index(&self) -> &PositionalIndex {
        &self.index
    }

    pub fn candidates(&self) -> &[(TermId, DocNum)] {
        &self.candidates
    }

    fn fresh(&self, i: usize) -> TermId {
        TermId((self.index.vocabulary().len() + i) as u32)
    }

    fn base(&self, rng: &mut ChaCha8Rng) -> (TermId, Vec<TermId>, Vec<TermId>) {
        let (t, num) = self.candidates[rng.gen_range(0..self.candidates.len())];
        let doc = self.index.document(num).terms.clone();
        let others: Vec<TermId> = doc
            .iter()
            .copied()
            .filter(|&x| x != t)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        (t, doc, others)
    }

    /// Builds one record; deterministic in (bench seed, recipe, trial).
    pub fn make_record(&self, recipe: Recipe, trial: u64) -> PerturbationRecord {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(self.seed, recipe.tag(), trial));
        let (t, doc, others) = self.base(&mut rng);
        let q = [t];
        let (k, perturbed, rng_seed) = match recipe {
            Recipe::VPan => {
                let k = rng.gen_range(1..=20u32);
                let noise: Vec<TermId> = (0..k).map(|_| others[rng.gen_range(0..others.len())]).collect();
                (k, apply_pan(&doc, &q, k, &noise), None)
            }
            Recipe::SPan => {
                let k = rng.gen_range(1..=20u32);
                let noise: Vec<TermId> = (0..k as usize).map(|i| self.fresh(i)).collect();
                (k, apply_pan(&doc, &q, k, &noise), None)
            }
            Recipe::VPls => {
                let k = rng.gen_range(2..=5u32);
                let pool = [others[rng.gen_range(0..others.len())]];
                let s = rng.gen();
                (k, apply_pls(&doc, &q, k, s, &pool), Some(s))
            }
            Recipe::SPls => {
                let k = rng.gen_range(2..=5u32);
                let mut pool = others.clone();
                pool.extend((0..4 * doc.len() * k as usize).map(|i| self.fresh(i)));
                let s = rng.gen();
                (k, apply_pls(&doc, &q, k, s, &pool), Some(s))
            }
            Recipe::Par => {
                let k = rng.gen_range(1..=20u32);
                (k, apply_par(&doc, &q, &t, k), None)
            }
        };
        PerturbationRecord {
            kind: recipe.kind(),
            k,
            term: t,
            original: doc,
            perturbed: perturbed.expect("generator respects operator preconditions"),
            rng_seed,
        }
    }

    /// `n` records of `recipe`. With a measure, records whose V/S type
    /// contradicts the recipe are dropped and counted.
    pub fn records(&self, recipe: Recipe, n: usize, measure: Option<ScopeMeasure>) -> (Vec<PerturbationRecord>, u64) {
        self.records_where(&[recipe], n, |r| match (measure, recipe.wants_v()) {
            (Some(m), Some(want_v)) => {
                let (o, p) = r.shapes();
                let ty = classify_shapes(&o, &p, m);
                if want_v {
                    ty.v_type
                } else {
                    ty.s_type
                }
            }
            _ => true,
        })
    }

    /// Draws records cycling through `recipes` until `n` satisfy `accept`.
    pub fn records_where(
        &self,
        recipes: &[Recipe],
        n: usize,
        accept: impl Fn(&PerturbationRecord) -> bool + Sync,
    ) -> (Vec<PerturbationRecord>, u64) {
        let mut out = Vec::with_capacity(n);
        let mut rejected = 0u64;
        let mut next = 0u64;
        let cap = (50 * n as u64 + 100) * recipes.len() as u64;
        let width = recipes.len() as u64;
        while out.len() < n && next < cap {
            let batch = (n - out.len()) as u64 * width + 16;
            let made: Vec<(PerturbationRecord, bool)> = (next..next + batch)
                .into_par_iter()
                .map(|i| {
                    let r = self.make_record(recipes[(i % width) as usize], i / width);
                    let ok = accept(&r);
                    (r, ok)
                })
                .collect();
            next += batch;
            for (r, ok) in made {
                if out.len() == n {
                    break;
                }
                if ok {
                    out.push(r);
                } else {
                    rejected += 1;
                }
            }
        }
        (out, rejected)
    }

    fn scorers(&self, family: &[ScoringConfig], vn: Option<ScopeMeasure>) -> Result<Vec<Scorer>> {
        family
            .iter()
            .map(|&c| Scorer::new(if let Some(m) = vn { c.with_vn(m) } else { c }, &self.index))
            .collect()
    }

    fn query(&self, t: TermId) -> &PreparedQuery {
        &self.queries[&t]
    }

    fn delta(&self, scorer: &Scorer, r: &PerturbationRecord) -> f64 {
        score_delta(scorer, self.query(r.term), r)
    }

    fn counterexample(
        &self,
        r: &PerturbationRecord,
        m: ScopeMeasure,
        s: &Scorer,
        expected: bool,
        delta: f64,
    ) -> Counterexample {
        let (o, p) = r.shapes();
        Counterexample {
            kind: r.kind,
            k: r.k,
            original_len: o.length,
            perturbed_len: p.length,
            c_original: r.c_original(),
            scope_original: m.scope(&o),
            scope_perturbed: m.scope(&p),
            params: s.config().to_string(),
            expected_hold: expected,
            score_delta: delta,
        }
    }

    /// Context including the scorer's own b, avgs and μ.
    fn context(&self, r: &PerturbationRecord, m: ScopeMeasure, s: &Scorer) -> super::ConditionContext {
        let ctx = r.context(&self.index, m);
        match s.effective_model() {
            Model::Okapi(p) => ctx.with_okapi(p.b, self.index.avg_scope(m).unwrap_or(0.0)),
            Model::Dp(p) => ctx.with_dp(p.mu),
            _ => ctx,
        }
    }

    /// Runs `constraint` over records × scorers. `select` returns `None` to
    /// skip a check and otherwise whether the constraint is expected to hold.
    #[allow(clippy::too_many_arguments)]
    fn cell(
        &self,
        suite: &str,
        constraint: Constraint,
        model: &str,
        measure: ScopeMeasure,
        measure_label: &str,
        filter: &str,
        asserted: bool,
        records: &[PerturbationRecord],
        scorers: &[Scorer],
        select: impl Fn(&PerturbationRecord, &Scorer) -> Option<bool> + Sync,
    ) -> Cell {
        let per_record: Vec<(u64, u64, Option<Counterexample>)> = records
            .par_iter()
            .map(|r| {
                let (mut checks, mut passed, mut bad) = (0u64, 0u64, None);
                for s in scorers {
                    let Some(expected) = select(r, s) else { continue };
                    let delta = self.delta(s, r);
                    checks += 1;
                    if constraint.holds(delta) == expected {
                        passed += 1;
                    } else if bad.is_none() {
                        bad = Some(self.counterexample(r, measure, s, expected, delta));
                    }
                }
                (checks, passed, bad)
            })
            .collect();
        let mut cell = Cell {
            suite: suite.into(),
            constraint,
            model: model.into(),
            measure: measure_label.into(),
            filter: filter.into(),
            asserted,
            records: 0,
            checks: 0,
            passed: 0,
            counterexample: None,
        };
        for (checks, passed, bad) in per_record {
            cell.records += u64::from(checks > 0);
            cell.checks += checks;
            cell.passed += passed;
            if cell.counterexample.is_none() {
                cell.counterexample = bad;
            }
        }
        cell
    }

    fn condition(&self, cond: Condition, r: &PerturbationRecord, m: ScopeMeasure, s: &Scorer) -> CondResult {
        eval_condition(cond, &self.context(r, m, s)).expect("bench contexts carry model parameters")
    }
}

fn measure_label(m: ScopeMeasure) -> String {
    m.to_string()
}

/// The full bench: constraint suites plus the behaviour matrix.
pub fn run_bench(bench: &AxiomBench, config: &BenchConfig) -> Result<AxiomReport> {
    if config.records == 0 {
        return Err(Error::Precondition(
            "axiom bench needs at least one record per recipe".into(),
        ));
    }
    let n = config.records;
    let mut cells = Vec::new();
    let mut rejected = Vec::new();

    let (mut pan, _) = bench.records(Recipe::VPan, n, None);
    pan.extend(bench.records(Recipe::SPan, n, None).0);
    let (mut pls, _) = bench.records(Recipe::VPls, n, None);
    pls.extend(bench.records(Recipe::SPls, n, None).0);
    let (par, _) = bench.records(Recipe::Par, n, None);

    let families = [("DP", false), ("Okapi", true)];
    let lp1 = ScopeMeasure::LengthPower { beta: 1.0 };

    // Original models under A1.
    for &(name, okapi) in &families {
        let scorers = bench.scorers(&config.family(okapi), None)?;
        let a1 =
            |r: &PerturbationRecord, s: &Scorer| bench.condition(Condition::A1, r, lp1, s).is_true().then_some(true);
        for (constraint, records) in [
            (Constraint::Lnc1, &pan),
            (Constraint::Lnc2, &pls),
            (Constraint::TfLnc, &par),
        ] {
            cells.push(bench.cell(
                "original", constraint, name, lp1, "-", "A1", true, records, &scorers, a1,
            ));
        }
    }

    // VN models, conditions C1/C2/C3/C4. Condition-filtered cells get their
    // own pools so each sees `n` matching records.
    let scope_cond = |cond: Condition, m: ScopeMeasure, want: bool| {
        move |r: &PerturbationRecord| {
            let res = eval_condition(cond, &r.context(&bench.index, m)).expect("scope-only condition");
            res.is_true() == want
        }
    };
    let pans = [Recipe::VPan, Recipe::SPan];
    let mut pools = HashMap::new();
    for m in [ScopeMeasure::UniqLength, ScopeMeasure::EntropyPower] {
        let key = measure_label(m);
        pools.insert(
            (key.clone(), "C1"),
            bench.records_where(&pans, n, scope_cond(Condition::C1, m, true)).0,
        );
        pools.insert(
            (key.clone(), "!C1"),
            bench.records_where(&pans, n, scope_cond(Condition::C1, m, false)).0,
        );
        pools.insert(
            (key.clone(), "C3"),
            bench
                .records_where(&[Recipe::Par], n, scope_cond(Condition::C3, m, true))
                .0,
        );
        pools.insert(
            (key, "C4"),
            bench
                .records_where(&[Recipe::Par], n, scope_cond(Condition::C4, m, true))
                .0,
        );
    }
    for &(name, okapi) in &families {
        let vn_name = format!("VN-{name}");
        for m in [ScopeMeasure::UniqLength, ScopeMeasure::EntropyPower] {
            let scorers = bench.scorers(&config.family(okapi), Some(m))?;
            let ml = measure_label(m);
            let pool = |f: &'static str| &pools[&(ml.clone(), f)];
            let all = |_: &PerturbationRecord, _: &Scorer| Some(true);
            cells.push(bench.cell(
                "vn",
                Constraint::Lnc1,
                &vn_name,
                m,
                &ml,
                "C1",
                true,
                pool("C1"),
                &scorers,
                all,
            ));
            cells.push(bench.cell(
                "vn",
                Constraint::Lnc1,
                &vn_name,
                m,
                &ml,
                "!C1",
                false,
                pool("!C1"),
                &scorers,
                all,
            ));
            cells.push(bench.cell(
                "vn",
                Constraint::Lnc2,
                &vn_name,
                m,
                &ml,
                "C2<=>",
                true,
                &pls,
                &scorers,
                |r, s| Some(bench.condition(Condition::C2, r, m, s).is_true()),
            ));
            cells.push(bench.cell(
                "vn",
                Constraint::TfLnc,
                &vn_name,
                m,
                &ml,
                "C3",
                true,
                pool("C3"),
                &scorers,
                all,
            ));
            match m {
                ScopeMeasure::UniqLength => {
                    cells.push(bench.cell(
                        "vn",
                        Constraint::TfLnc,
                        &vn_name,
                        m,
                        &ml,
                        "all",
                        true,
                        &par,
                        &scorers,
                        all,
                    ));
                }
                _ => {
                    cells.push(bench.cell(
                        "vn",
                        Constraint::TfLnc,
                        &vn_name,
                        m,
                        &ml,
                        "C4",
                        true,
                        pool("C4"),
                        &scorers,
                        all,
                    ));
                    cells.push(bench.cell(
                        "vn",
                        Constraint::TfLnc,
                        &vn_name,
                        m,
                        &ml,
                        "all",
                        false,
                        &par,
                        &scorers,
                        all,
                    ));
                }
            }
        }
        // LengthPower: all three constraints unconditionally.
        for &beta in &config.betas {
            let m = ScopeMeasure::length_power(beta)?;
            let scorers = bench.scorers(&config.family(okapi), Some(m))?;
            let ml = measure_label(m);
            for (constraint, records) in [
                (Constraint::Lnc1, &pan),
                (Constraint::Lnc2, &pls),
                (Constraint::TfLnc, &par),
            ] {
                cells.push(bench.cell(
                    "lengthpower",
                    constraint,
                    &vn_name,
                    m,
                    &ml,
                    "all",
                    true,
                    records,
                    &scorers,
                    |_, _| Some(true),
                ));
            }
        }
    }

    // H2 on V-PLS records.
    for m in [ScopeMeasure::UniqLength, ScopeMeasure::EntropyPower] {
        let (vpls, rej) = bench.records(Recipe::VPls, n, Some(m));
        rejected.push((Recipe::VPls.label().to_string(), measure_label(m), rej));
        for &(name, okapi) in &families {
            let scorers = bench.scorers(&config.family(okapi), Some(m))?;
            cells.push(bench.cell(
                "h2",
                Constraint::H2Lnc,
                &format!("VN-{name}"),
                m,
                &measure_label(m),
                "V-PLS",
                true,
                &vpls,
                &scorers,
                |_, _| Some(true),
            ));
        }
    }

    let mut behavior = Vec::new();
    for m in [ScopeMeasure::UniqLength, ScopeMeasure::EntropyPower] {
        let (cells_m, rej) = behavior_matrix(bench, config, m)?;
        behavior.extend(cells_m);
        rejected.extend(rej);
    }

    let queries: Vec<Query> = {
        let mut terms: Vec<TermId> = bench.candidates.iter().map(|&(t, _)| t).collect();
        terms.dedup();
        terms
            .into_iter()
            .filter_map(|t| bench.index.vocabulary().term(t).map(|s| Query::new("w", [s])))
            .collect()
    };
    let stats = bench.index.stats();
    Ok(AxiomReport {
        seed: bench.seed,
        records_per_recipe: n,
        collection: CollectionInfo {
            num_docs: stats.num_docs,
            total_length: stats.total_length,
            vocabulary: bench.index.vocabulary().len(),
            candidate_pairs: bench.candidates.len(),
        },
        rejected,
        a1: a1_coverage(&bench.index, &queries)?,
        cells,
        behavior,
    })
}

/// Perturbation rows × {original, VN} for DP and Okapi under measure `m`,
/// followed by constructed S-PAN instances on which C5 (VN-Okapi) or C6
/// (VN-DP) holds.
pub fn behavior_matrix(
    bench: &AxiomBench,
    config: &BenchConfig,
    m: ScopeMeasure,
) -> Result<(Vec<BehaviorCell>, Vec<Rejected>)> {
    let n = config.records;
    let mut rows = Vec::new();
    let mut rejected = Vec::new();
    for recipe in [Recipe::SPan, Recipe::VPan, Recipe::SPls, Recipe::VPls] {
        let (records, rej) = bench.records(recipe, n, Some(m));
        rejected.push((recipe.label().to_string(), measure_label(m), rej));
        rows.push((recipe, records, rej));
    }

    let mut out = Vec::new();
    for (name, okapi) in [("DP", false), ("Okapi", true)] {
        let gate = if okapi { Condition::C5 } else { Condition::C6 };
        for vn in [false, true] {
            let scorers = bench.scorers(&config.family(okapi), vn.then_some(m))?;
            let model = if vn { format!("VN-{name}") } else { name.to_string() };
            for (recipe, records, rej) in &rows {
                let expected = match (vn, recipe) {
                    (false, Recipe::SPan | Recipe::VPan) => Expectation::Penalize,
                    (false, _) => Expectation::Prefer,
                    (true, Recipe::SPan) => Expectation::Gated,
                    (true, Recipe::VPan | Recipe::VPls) => Expectation::Penalize,
                    (true, _) => Expectation::Prefer,
                };
                let mut cell = tally(bench, records, &scorers, m, gate, expected);
                cell.model = model.clone();
                cell.measure = measure_label(m);
                cell.row = recipe.label().to_string();
                cell.rejected = *rej;
                out.push(cell);
            }
            if vn {
                let scorers = bench.scorers(&config.family(okapi), Some(m))?;
                let instances = constructed_spans(bench, &scorers, m, gate, n);
                let mut cell = BehaviorCell {
                    model: model.clone(),
                    measure: measure_label(m),
                    row: format!("S-PAN {gate} true"),
                    expected: Expectation::Prefer,
                    constructed: true,
                    checks: 0,
                    agree: 0,
                    penalized: 0,
                    preferred: 0,
                    gated_true: 0,
                    rejected: 0,
                };
                for (r, si) in &instances {
                    let d = bench.delta(&scorers[*si], r);
                    cell.checks += 1;
                    cell.gated_true += 1;
                    cell.penalized += u64::from(d <= SCORE_TOL);
                    cell.preferred += u64::from(d >= -SCORE_TOL);
                    cell.agree += u64::from(d >= -SCORE_TOL);
                }
                out.push(cell);
            }
        }
    }
    Ok((out, rejected))
}

fn tally(
    bench: &AxiomBench,
    records: &[PerturbationRecord],
    scorers: &[Scorer],
    m: ScopeMeasure,
    gate: Condition,
    expected: Expectation,
) -> BehaviorCell {
    let mut cell = BehaviorCell {
        model: String::new(),
        measure: String::new(),
        row: String::new(),
        expected,
        constructed: false,
        checks: 0,
        agree: 0,
        penalized: 0,
        preferred: 0,
        gated_true: 0,
        rejected: 0,
    };
    let parts: Vec<[u64; 5]> = records
        .par_iter()
        .map(|r| {
            let mut t = [0u64; 5];
            for s in scorers {
                let d = bench.delta(s, r);
                let (pen, pre) = (d <= SCORE_TOL, d >= -SCORE_TOL);
                let want_prefer = match expected {
                    Expectation::Penalize => false,
                    Expectation::Prefer => true,
                    Expectation::Gated => {
                        let g = bench.condition(gate, r, m, s).is_true();
                        t[3] += u64::from(g);
                        g
                    }
                };
                t[0] += 1;
                t[1] += u64::from(if want_prefer { pre } else { pen });
                t[2] += u64::from(pen);
                t[4] += u64::from(pre);
            }
            t
        })
        .collect();
    for t in parts {
        cell.checks += t[0];
        cell.agree += t[1];
        cell.penalized += t[2];
        cell.gated_true += t[3];
        cell.preferred += t[4];
    }
    cell
}

/// Very verbose two-word documents `w^r h^(L−r)` plus K fresh words: the
/// setting in which C5/C6 become true. Returns up to `n` (record, scorer
/// index) pairs on which `gate` holds.
fn constructed_spans(
    bench: &AxiomBench,
    scorers: &[Scorer],
    m: ScopeMeasure,
    gate: Condition,
    n: usize,
) -> Vec<(PerturbationRecord, usize)> {
    let mut out = Vec::new();
    let mut trial = 0u64;
    while out.len() < n && trial < 200 * n as u64 + 1000 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(bench.seed, 100 + gate as u64, trial));
        trial += 1;
        let (t, _, others) = bench.base(&mut rng);
        let h = others[rng.gen_range(0..others.len())];
        let len = rng.gen_range(40..=400usize);
        let r = rng.gen_range((len / 20).max(1)..=len / 2);
        let mut doc: Vec<TermId> = std::iter::repeat_n(t, r)
            .chain(std::iter::repeat_n(h, len - r))
            .collect();
        doc.shuffle(&mut rng);
        let k = rng.gen_range(1..=3u32);
        let noise: Vec<TermId> = (0..k as usize).map(|i| bench.fresh(i)).collect();
        let record = PerturbationRecord {
            kind: PerturbationKind::Pan,
            k,
            term: t,
            perturbed: apply_pan(&doc, &[t], k, &noise).expect("fresh noise"),
            original: doc,
            rng_seed: None,
        };
        let (o, p) = record.shapes();
        if !classify_shapes(&o, &p, m).s_type {
            continue;
        }
        let si = rng.gen_range(0..scorers.len());
        if bench.condition(gate, &record, m, &scorers[si]).is_true() {
            out.push((record, si));
        }
    }
    out
}
