//! `vnorm`: index a corpus, search it with DP/JM/Okapi/MRF and their
//! verbosity-normalized variants, evaluate, tune and run the axiom bench.

mod method;

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use method::{parse_method, KPolicyArg, ModelFlags, ModelName};
use vnorm::analysis::{load_stopwords, AnalyzerConfig, Stemmer};
use vnorm::axioms::{run_bench, AxiomBench, BenchConfig, SyntheticSpec};
use vnorm::eval::{compare_per_query, evaluate, Qrels, Run};
use vnorm::index::{load_index, read_corpus, save_index, PositionalIndex};
use vnorm::scoring::{read_topics, Query, QueryKind, Scorer};
use vnorm::tuning::{cross_validate, tune_report, CvOptions, FoldPlan, Metric, ParamGrid};

#[derive(Parser, Debug)]
#[command(
    name = "vnorm",
    version,
    about = "Verbosity and scope length normalization for ad hoc retrieval"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a positional index from a JSON-lines corpus
    Index(IndexArgs),
    /// Collection statistics: length, entropy power, verbosity
    Stats(StatsArgs),
    /// Rank documents for each topic and write a TREC run
    Search(SearchArgs),
    /// MAP and P@k of a run against qrels
    Evaluate(EvaluateArgs),
    /// Cross-validated grid search for one or more methods
    Tune(TuneArgs),
    /// Randomized check of the length normalization constraints
    AxiomCheck(AxiomArgs),
    /// Paired t-test between two runs
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct IndexArgs {
    /// JSON lines, one `{"id", "text"}` object per document
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    index: PathBuf,
    /// One stopword per line
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long, default_value = "none")]
    stemmer: Stemmer,
    /// Overwrite an existing index file
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(long)]
    index: PathBuf,
    /// Scope measure used for verbosity
    #[arg(long, default_value = "entropypower")]
    scope: String,
    #[arg(long)]
    beta: Option<f64>,
    /// Also write the statistics as JSON
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TopicArgs {
    #[arg(long)]
    index: PathBuf,
    /// JSON lines with `id`, `title`, `description`, `narrative`
    #[arg(long)]
    topics: PathBuf,
    /// sk = title, sv = description, lv = all three fields
    #[arg(long, default_value = "sk")]
    query_type: QueryKind,
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long, value_enum, default_value = "dp")]
    model: ModelName,
    /// lengthpower[:β], uniqlength or entropypower; turns on verbosity normalization
    #[arg(long)]
    scope: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    /// Dirichlet prior (DP and MRF)
    #[arg(long, default_value_t = 2000.0)]
    mu: f64,
    /// JM collection weight
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, default_value_t = 1.2)]
    k1: f64,
    #[arg(long, default_value_t = 0.75)]
    b: f64,
    #[arg(long, default_value_t = 1000.0)]
    k3: f64,
    /// Lower bound; selects DP+ or Okapi+
    #[arg(long)]
    delta: Option<f64>,
    /// MRF weights λ_T,λ_O,λ_U
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "unit")]
    k_policy: KPolicyArg,
}

impl ModelArgs {
    fn flags(&self) -> ModelFlags {
        ModelFlags {
            model: self.model,
            scope: self.scope.clone(),
            beta: self.beta,
            mu: self.mu,
            lambda: self.lambda,
            k1: self.k1,
            b: self.b,
            k3: self.k3,
            delta: self.delta,
            lambdas: self.lambdas.clone(),
            k_policy: self.k_policy,
        }
    }
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[command(flatten)]
    topics: TopicArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 1000)]
    topk: usize,
    /// Output run file; stdout when absent
    #[arg(long)]
    run: Option<PathBuf>,
    #[arg(long, default_value = "vnorm")]
    tag: String,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    /// Precision cutoff
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TuneArgs {
    #[command(flatten)]
    topics: TopicArgs,
    #[arg(long)]
    qrels: PathBuf,
    /// `[vn-]dp|okapi|mrf[+][:scope[:β]]`, repeatable; the first is the baseline
    #[arg(long = "method", required = true)]
    methods: Vec<String>,
    /// JSON object mapping fold name to its test query ids
    #[arg(long)]
    folds: Option<PathBuf>,
    /// Round-robin folds over the judged topics when --folds is absent
    #[arg(long, default_value_t = 5)]
    num_folds: usize,
    #[arg(long, default_value = "map")]
    metric: Metric,
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    k1: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    b: Option<Vec<f64>>,
    #[arg(long)]
    k3: Option<f64>,
    /// Overrides both the DP and the Okapi δ grids
    #[arg(long, value_delimiter = ',')]
    delta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    beta: Option<Vec<f64>>,
    /// Fixed MRF weights λ_T,λ_O,λ_U
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    /// Search the λ simplex at this resolution instead
    #[arg(long, conflicts_with = "lambdas")]
    lambda_simplex: Option<f64>,
    /// Keep k = 1 under LengthPower instead of dividing k1 and μ by avgv
    #[arg(long)]
    no_rescale: bool,
    #[arg(long, default_value_t = 1000)]
    topk: usize,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AxiomArgs {
    /// Use this index instead of a synthetic collection
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Records per recipe
    #[arg(long, default_value_t = 1000)]
    records: usize,
    /// Documents in the synthetic collection
    #[arg(long, default_value_t = 300)]
    docs: u32,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Exit nonzero when an asserted cell fails
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    baseline: PathBuf,
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long, default_value = "map")]
    metric: Metric,
    /// Precision cutoff
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Index(a) => index(a)?,
        Command::Stats(a) => stats(a)?,
        Command::Search(a) => search(a)?,
        Command::Evaluate(a) => evaluate_cmd(a)?,
        Command::Tune(a) => tune(a)?,
        Command::AxiomCheck(a) => return axiom_check(a),
        Command::Compare(a) => compare(a)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(text: &str) -> Result<()> {
    std::io::stdout().lock().write_all(text.as_bytes())?;
    Ok(())
}

fn index(a: IndexArgs) -> Result<()> {
    let mut analyzer = AnalyzerConfig::default().with_stemmer(a.stemmer);
    if let Some(path) = &a.stopwords {
        analyzer = analyzer.with_stopwords(load_stopwords(path)?);
    }
    if a.index.exists() && !a.force {
        bail!("{} already exists (use --force to overwrite)", a.index.display());
    }
    let docs = read_corpus(&a.corpus)?;
    let index = PositionalIndex::build(docs, analyzer)?;
    save_index(&index, &a.index, a.force)?;
    let stats = index.stats();
    eprintln!(
        "indexed {} documents, {} tokens, {} terms",
        stats.num_docs,
        stats.total_length,
        index.vocabulary().len()
    );
    Ok(())
}

fn stats(a: StatsArgs) -> Result<()> {
    let measure = method::scope_measure(Some(&a.scope), a.beta)?.expect("scope is set");
    let index = load_index(&a.index)?;
    let s = index.collection_summary(measure)?;
    let cv = |c: Option<f64>| c.map_or("-".to_string(), |c| format!("{c:.4}"));
    let mut out = String::new();
    let _ = writeln!(out, "documents\t{}", s.num_docs);
    let _ = writeln!(out, "tokens\t{}", s.total_length);
    let _ = writeln!(out, "terms\t{}", index.vocabulary().len());
    let _ = writeln!(out, "scope\t{}", s.measure);
    let _ = writeln!(out, "\tmean\tcv");
    for (name, st) in [("|d|", s.length), ("h(d)", s.entropy_power), ("v(d)", s.verbosity)] {
        let _ = writeln!(out, "{name}\t{:.4}\t{}", st.mean, cv(st.coeff_var));
    }
    emit(&out)?;
    if let Some(path) = &a.report {
        write_json(path, &s)?;
    }
    Ok(())
}

fn load_queries(t: &TopicArgs, index: &PositionalIndex) -> Result<Vec<Query>> {
    let topics = read_topics(&t.topics)?;
    Ok(topics
        .iter()
        .map(|topic| topic.to_query(t.query_type, index.analyzer()))
        .collect())
}

fn search(a: SearchArgs) -> Result<()> {
    let config = a.model.flags().config()?;
    let index = load_index(&a.topics.index)?;
    let queries = load_queries(&a.topics, &index)?;
    let scorer = Scorer::new(config, &index)?;
    let mut run = Run::new(a.tag.clone());
    for q in &queries {
        if q.is_empty() {
            eprintln!("warning: topic {} has no terms after analysis; skipped", q.id);
            continue;
        }
        let prepared = scorer.prepare(q, &index)?;
        if !prepared.diagnostics.unknown_terms.is_empty() {
            eprintln!(
                "warning: topic {}: terms not in the collection: {}",
                q.id,
                prepared.diagnostics.unknown_terms.join(" ")
            );
        }
        let hits = scorer.search(&index, &prepared, a.topk)?;
        run.insert_hits(q.id.clone(), &hits)?;
    }
    match &a.run {
        Some(path) => run.write(path)?,
        None => emit(&run.to_trec())?,
    }
    eprintln!("{config}: {} topics", run.len());
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let run = Run::read(&a.run)?;
    let qrels = Qrels::read(&a.qrels)?;
    let ev = evaluate(&run, &qrels, a.k)?;
    emit(&ev.to_text())?;
    if let Some(path) = &a.report {
        write_json(path, &ev)?;
    }
    Ok(())
}

fn tune(a: TuneArgs) -> Result<()> {
    let methods = a.methods.iter().map(|m| parse_method(m)).collect::<Result<Vec<_>>>()?;
    let mut grid = ParamGrid::default();
    if let Some(v) = &a.mu {
        grid.mu = v.clone();
    }
    if let Some(v) = &a.k1 {
        grid.k1 = v.clone();
    }
    if let Some(v) = &a.b {
        grid.b = v.clone();
    }
    if let Some(v) = a.k3 {
        grid.k3 = v;
    }
    if let Some(v) = &a.delta {
        grid.delta_dp = v.clone();
        grid.delta_okapi = v.clone();
    }
    if let Some(v) = &a.beta {
        grid.beta = v.clone();
    }
    if let Some(l) = &a.lambdas {
        grid.lambdas = vec![method::mrf_lambdas(Some(l))?];
    }
    if let Some(step) = a.lambda_simplex {
        grid = grid.with_lambda_simplex(step)?;
    }

    let index = load_index(&a.topics.index)?;
    let qrels = Qrels::read(&a.qrels)?;
    let mut queries = load_queries(&a.topics, &index)?;
    let plan = match &a.folds {
        Some(path) => {
            let plan = FoldPlan::read(path)?;
            let named: std::collections::BTreeSet<&str> =
                plan.folds().flat_map(|(_, q)| q.iter().map(String::as_str)).collect();
            queries.retain(|q| named.contains(q.id.as_str()));
            plan
        }
        None => {
            let before = queries.len();
            queries.retain(|q| qrels.num_relevant(&q.id) > 0 && !q.is_empty());
            if queries.len() < before {
                eprintln!(
                    "warning: {} topics without relevant documents or terms left out",
                    before - queries.len()
                );
            }
            let ids: Vec<String> = queries.iter().map(|q| q.id.clone()).collect();
            FoldPlan::round_robin(&ids, a.num_folds)?
        }
    };
    let opts = CvOptions { topk: a.topk, k: a.k };
    let mut results = Vec::new();
    for mut m in methods {
        m.rescale = !a.no_rescale;
        eprintln!("tuning {m}");
        results.push(cross_validate(
            &index, &queries, &qrels, m, &grid, &plan, a.metric, opts,
        )?);
    }
    let report = tune_report(results)?;
    emit(&report.to_text())?;
    if let Some(path) = &a.report {
        write_json(path, &report)?;
    }
    Ok(())
}

fn axiom_check(a: AxiomArgs) -> Result<ExitCode> {
    let bench = match &a.index {
        Some(path) => AxiomBench::new(load_index(path)?, a.seed)?,
        None => {
            let spec = SyntheticSpec {
                num_docs: a.docs,
                ..SyntheticSpec::default()
            };
            AxiomBench::synthetic(&spec, a.seed)?
        }
    };
    let config = BenchConfig {
        seed: a.seed,
        records: a.records,
        ..BenchConfig::default()
    };
    let report = run_bench(&bench, &config)?;
    emit(&report.to_text())?;
    if let Some(path) = &a.report {
        write_json(path, &report)?;
    }
    if a.strict && !report.all_asserted_pass() {
        eprintln!("error: asserted constraint cells failed");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn compare(a: CompareArgs) -> Result<()> {
    let qrels = Qrels::read(&a.qrels)?;
    let k = a.k;
    let base = evaluate(&Run::read(&a.baseline)?, &qrels, k)?;
    let other = evaluate(&Run::read(&a.run)?, &qrels, k)?;
    let pick = |e: &vnorm::eval::Evaluation| match a.metric {
        Metric::Map => e.ap_vector(),
        Metric::P5 => e.p_at_k_vector(),
    };
    let t = compare_per_query(&pick(&other), &pick(&base))?;
    let (mb, mo) = match a.metric {
        Metric::Map => (base.map, other.map),
        Metric::P5 => (base.mean_p_at_k, other.mean_p_at_k),
    };
    let mut out = String::new();
    let _ = writeln!(out, "metric\t{}", a.metric);
    let _ = writeln!(out, "queries\t{}", t.n);
    let _ = writeln!(out, "baseline\t{mb:.4}");
    let _ = writeln!(out, "run\t{mo:.4}");
    let _ = writeln!(out, "mean_diff\t{:.4}", t.mean_diff);
    match (t.t, t.p_two_sided) {
        (Some(tv), Some(p)) => {
            let _ = writeln!(out, "t\t{tv:.4}\ndf\t{}\np\t{p:.4}", t.df);
            let _ = writeln!(out, "significant\t{}", if t.significant_95 { "yes" } else { "no" });
        }
        _ => {
            let _ = writeln!(out, "t\tundefined (identical per-query scores)");
        }
    }
    emit(&out)?;
    if let Some(path) = &a.report {
        write_json(path, &t)?;
    }
    Ok(())
}
