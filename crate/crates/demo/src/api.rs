//! JSON-in, JSON-out functions behind the browser page.

use serde::{Deserialize, Serialize};

use vnorm::analysis::{analyze, AnalyzerConfig};
use vnorm::axioms::{apply_pan, apply_par, apply_pls};
use vnorm::index::{PositionalIndex, TermId};
use vnorm::scope::{ScopeMeasure, TermShape};
use vnorm::scoring::{Query, Scorer, ScoringConfig, TokenDoc};

/// Model settings posted by the page.
#[derive(Debug, Clone, Deserialize)]
pub struct ModelForm {
    pub model: String,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_k1")]
    pub k1: f64,
    #[serde(default = "default_b")]
    pub b: f64,
    /// `none` or a scope measure.
    #[serde(default)]
    pub scope: Option<String>,
}

fn default_mu() -> f64 {
    2000.0
}

fn default_k1() -> f64 {
    1.2
}

fn default_b() -> f64 {
    0.75
}

impl ModelForm {
    fn base(&self) -> Result<ScoringConfig, String> {
        match self.model.to_ascii_lowercase().as_str() {
            "dp" => Ok(ScoringConfig::dp(self.mu)),
            "okapi" => Ok(ScoringConfig::okapi(self.k1, self.b)),
            other => Err(format!("unknown model `{other}` (dp, okapi)")),
        }
    }

    fn config(&self) -> Result<ScoringConfig, String> {
        let base = self.base()?;
        let config = match self.scope.as_deref().map(str::trim) {
            None | Some("") | Some("none") => base,
            Some(s) => base.with_vn(s.parse::<ScopeMeasure>().map_err(|e| e.to_string())?),
        };
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

/// One document per line; `id<TAB>text` names it, otherwise it is `d<n>`.
pub fn parse_corpus(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(n, line)| match line.split_once('\t') {
            Some((id, body)) if !id.trim().is_empty() => (id.trim().to_string(), body.to_string()),
            _ => (format!("d{}", n + 1), line.to_string()),
        })
        .collect()
}

fn build(corpus: &str) -> Result<PositionalIndex, String> {
    let docs = parse_corpus(corpus);
    if docs.is_empty() {
        return Err("the corpus is empty".into());
    }
    PositionalIndex::build(docs, AnalyzerConfig::default()).map_err(|e| e.to_string())
}

fn json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Profile {
    length: u32,
    unique: u32,
    entropy_power: f64,
    measures: Vec<MeasureRow>,
}

#[derive(Serialize)]
struct MeasureRow {
    measure: String,
    scope: f64,
    verbosity: f64,
}

/// Length, scope and verbosity of `text` under each measure.
pub fn profile(text: &str, beta: f64) -> Result<String, String> {
    let tokens = analyze(text, &AnalyzerConfig::default());
    if tokens.is_empty() {
        return Err("no tokens".into());
    }
    let shape = TermShape::of(&tokens);
    let lp = ScopeMeasure::length_power(beta).map_err(|e| e.to_string())?;
    let measures = [lp, ScopeMeasure::UniqLength, ScopeMeasure::EntropyPower]
        .into_iter()
        .map(|m| MeasureRow {
            measure: m.to_string(),
            scope: m.scope(&shape),
            verbosity: m.verbosity(&shape),
        })
        .collect();
    json(&Profile {
        length: shape.length,
        unique: shape.unique,
        entropy_power: shape.entropy_power,
        measures,
    })
}

#[derive(Serialize)]
struct Ranked {
    label: String,
    hits: Vec<vnorm::scoring::Hit>,
    unknown: Vec<String>,
}

/// Top documents of `corpus` for `query`.
pub fn rank(corpus: &str, query: &str, form: &str) -> Result<String, String> {
    let form: ModelForm = serde_json::from_str(form).map_err(|e| e.to_string())?;
    let config = form.config()?;
    let index = build(corpus)?;
    let q = Query::new("q", analyze(query, index.analyzer()));
    let scorer = Scorer::new(config, &index).map_err(|e| e.to_string())?;
    let prepared = scorer.prepare(&q, &index).map_err(|e| e.to_string())?;
    let hits = scorer.search(&index, &prepared, 20).map_err(|e| e.to_string())?;
    json(&Ranked {
        label: config.to_string(),
        hits,
        unknown: prepared.diagnostics.unknown_terms.clone(),
    })
}

#[derive(Serialize)]
struct Series {
    operator: &'static str,
    model: String,
    /// f(ψ_K(d)) − f(d) for K = 1, 2, ...
    delta: Vec<f64>,
}

/// Score change of document `doc_id` for the one-word query `word` as K
/// grows, under the original model and its VN variants.
pub fn curves(corpus: &str, doc_id: &str, word: &str, form: &str, max_k: u32) -> Result<String, String> {
    let form: ModelForm = serde_json::from_str(form).map_err(|e| e.to_string())?;
    let base = form.base()?;
    base.validate().map_err(|e| e.to_string())?;
    if !(1..=50).contains(&max_k) {
        return Err("K must lie in 1..=50".into());
    }
    let index = build(corpus)?;
    let num = index.doc_num(doc_id).ok_or_else(|| format!("no document `{doc_id}`"))?;
    let terms = analyze(word, index.analyzer());
    let [w] = terms.as_slice() else {
        return Err("give exactly one query word".into());
    };
    let wid = index
        .term_id(w)
        .ok_or_else(|| format!("`{w}` does not occur in the corpus"))?;
    let d: Vec<TermId> = index
        .doc_tokens(num)
        .iter()
        .map(|t| index.term_id(t).expect("indexed token"))
        .collect();
    let others: Vec<TermId> = d.iter().copied().filter(|&t| t != wid).collect();
    let fresh: Vec<TermId> = (0..max_k)
        .map(|i| TermId(index.vocabulary().len() as u32 + i))
        .collect();
    let q = [wid];

    let mut configs = vec![base];
    for m in [ScopeMeasure::UniqLength, ScopeMeasure::EntropyPower] {
        configs.push(base.with_vn(m));
    }
    let query = Query::new("q", [w.as_str()]);
    let mut out = Vec::new();
    for config in configs {
        let scorer = Scorer::new(config, &index).map_err(|e| e.to_string())?;
        let prepared = scorer.prepare(&query, &index).map_err(|e| e.to_string())?;
        let f = |doc: &[TermId]| scorer.score(&prepared, &TokenDoc::new(doc));
        let f0 = f(&d);
        let label = match config.vn {
            Some(vn) => format!("{} {}", config.label(), vn.measure),
            None => config.label(),
        };
        let mut push = |operator: &'static str, docs: Vec<Vec<TermId>>| {
            out.push(Series {
                operator,
                model: label.clone(),
                delta: docs.iter().map(|x| f(x) - f0).collect(),
            })
        };
        let ks = 1..=max_k;
        push(
            "PAR",
            ks.clone().map(|k| apply_par(&d, &q, &wid, k).expect("PAR")).collect(),
        );
        push(
            "PAN new words",
            ks.clone().map(|k| apply_pan(&d, &q, k, &fresh).expect("PAN")).collect(),
        );
        if !others.is_empty() {
            let noise: Vec<TermId> = others.iter().cycle().take(max_k as usize).copied().collect();
            push(
                "PAN repeated words",
                ks.clone().map(|k| apply_pan(&d, &q, k, &noise).expect("PAN")).collect(),
            );
            push(
                "PLS",
                ks.map(|k| apply_pls(&d, &q, k, u64::from(k), &others).expect("PLS"))
                    .collect(),
            );
        }
    }
    json(&out)
}
