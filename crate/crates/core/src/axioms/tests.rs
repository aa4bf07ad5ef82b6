use proptest::prelude::*;

use super::*;
use crate::analysis::AnalyzerConfig;
use crate::scoring::ScoringConfig;

fn toy() -> PositionalIndex {
    PositionalIndex::build([("d1", "a b a c"), ("d2", "a b")], AnalyzerConfig::default()).unwrap()
}

fn ids(index: &PositionalIndex, toks: &[&str]) -> Vec<TermId> {
    toks.iter()
        .map(|t| index.term_id(t).unwrap_or(TermId(index.vocabulary().len() as u32 + 7)))
        .collect()
}

fn record(
    kind: PerturbationKind,
    k: u32,
    term: TermId,
    original: Vec<TermId>,
    perturbed: Vec<TermId>,
) -> PerturbationRecord {
    PerturbationRecord {
        kind,
        k,
        term,
        original,
        perturbed,
        rng_seed: None,
    }
}

#[test]
fn constraint_names_roundtrip() {
    for c in [
        Constraint::Lnc1,
        Constraint::Lnc2,
        Constraint::TfLnc,
        Constraint::H1Lnc,
        Constraint::H2Lnc,
    ] {
        assert_eq!(c.to_string().parse::<Constraint>().unwrap(), c);
        assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{c}\""));
    }
    assert!("LNC3".parse::<Constraint>().is_err());
}

#[test]
fn holds_uses_tolerance() {
    assert!(Constraint::Lnc1.holds(1e-13));
    assert!(!Constraint::Lnc1.holds(1e-9));
    assert!(Constraint::Lnc2.holds(-1e-13));
    assert!(!Constraint::TfLnc.holds(1e-13));
    assert!(Constraint::TfLnc.holds(1e-6));
}

#[test]
fn pan_on_dp_penalizes() {
    let index = toy();
    let a = index.term_id("a").unwrap();
    let d = ids(&index, &["a", "b", "a", "c"]);
    let c = index.term_id("c").unwrap();
    let pert = apply_pan(&d, &[a], 2, &[c, c]).unwrap();
    let r = record(PerturbationKind::Pan, 2, a, d, pert);
    assert!(r.postconditions_hold());
    let scorer = Scorer::new(ScoringConfig::dp(2.0), &index).unwrap();
    let q = record_query(&index, a).unwrap();
    let out = check_constraint(Constraint::Lnc1, &scorer, &q, &r, None).unwrap();
    assert!(out.holds);
    assert!(out.score_delta < 0.0);
}

#[test]
fn check_constraint_preconditions() {
    let index = toy();
    let a = index.term_id("a").unwrap();
    let d = ids(&index, &["a", "b"]);
    let par = record(
        PerturbationKind::Par,
        1,
        a,
        d.clone(),
        apply_par(&d, &[a], &a, 1).unwrap(),
    );
    let scorer = Scorer::new(ScoringConfig::dp(2.0), &index).unwrap();
    let q = record_query(&index, a).unwrap();
    assert!(check_constraint(Constraint::Lnc1, &scorer, &q, &par, None).is_err());
    assert!(
        check_constraint(Constraint::TfLnc, &scorer, &q, &par, None)
            .unwrap()
            .holds
    );

    let b = index.term_id("b").unwrap();
    let pan = record(
        PerturbationKind::Pan,
        1,
        a,
        d.clone(),
        apply_pan(&d, &[a], 1, &[b]).unwrap(),
    );
    assert!(check_constraint(Constraint::H1Lnc, &scorer, &q, &pan, None).is_err());
    let ty = pan.classify(ScopeMeasure::UniqLength);
    assert!(ty.s_type && ty.v_type);
    assert!(check_constraint(Constraint::H1Lnc, &scorer, &q, &pan, Some(ty)).is_ok());

    let pls = record(
        PerturbationKind::Pls,
        2,
        a,
        d.clone(),
        apply_pls(&d, &[a], 2, 3, &[b]).unwrap(),
    );
    let s_only = TypeClassification {
        v_type: false,
        s_type: true,
    };
    assert!(check_constraint(Constraint::H2Lnc, &scorer, &q, &pls, Some(s_only)).is_err());
}

#[test]
fn record_context_roles() {
    let index = toy();
    let a = index.term_id("a").unwrap();
    let d = ids(&index, &["a", "b"]);
    let par = record(
        PerturbationKind::Par,
        2,
        a,
        d.clone(),
        apply_par(&d, &[a], &a, 2).unwrap(),
    );
    let ctx = par.context(&index, ScopeMeasure::UniqLength);
    assert_eq!((ctx.d1.length, ctx.c1, ctx.d2.length, ctx.c2), (4, 3, 2, 1));
    assert_eq!(eval_condition(Condition::C3, &ctx).unwrap(), CondResult::True);
    assert_eq!((ctx.cf, ctx.coll_len, ctx.df, ctx.num_docs), (3, 6, 2, 2));
}

#[test]
fn vn_dp_s_pan_behaviour_follows_c6() {
    // w^r h^(L-r) plus one fresh word, scored by VN-DP under UniqLength.
    let index = PositionalIndex::build(
        [
            ("d1", "w h h h"),
            ("d2", "x y z h"),
            ("d3", "x y h z"),
            ("d4", "y h x z"),
        ],
        AnalyzerConfig::default(),
    )
    .unwrap();
    let w = index.term_id("w").unwrap();
    let h = index.term_id("h").unwrap();
    let fresh = TermId(100);
    let mut doc = vec![w; 20];
    doc.extend(std::iter::repeat_n(h, 180));
    let pert = apply_pan(&doc, &[w], 1, &[fresh]).unwrap();
    let r = record(PerturbationKind::Pan, 1, w, doc, pert);
    let m = ScopeMeasure::UniqLength;
    let q = record_query(&index, w).unwrap();
    for mu in [1.0, 10.0, 100.0, 1000.0, 10000.0] {
        let scorer = Scorer::new(ScoringConfig::dp(mu).with_vn(m), &index).unwrap();
        let c6 = eval_condition(Condition::C6, &r.context(&index, m).with_dp(mu)).unwrap();
        let out = check_constraint(Constraint::H1Lnc, &scorer, &q, &r, Some(r.classify(m))).unwrap();
        assert_eq!(c6.is_true(), out.holds, "mu {mu}: delta {}", out.score_delta);
    }
}

#[test]
fn a1_coverage_single_doc() {
    let index = PositionalIndex::build([("d1", "a a b")], AnalyzerConfig::default()).unwrap();
    let cov = a1_coverage(&index, &[Query::new("q", ["a", "zz"])]).unwrap();
    assert_eq!((cov.dp_satisfied, cov.dp_pairs), (1, 1));
    assert_eq!(cov.dp_pct(), 100.0);
    // df = 1 > N/2 = 0.5
    assert_eq!((cov.okapi_satisfied, cov.okapi_terms), (0, 1));
    assert_eq!(cov.okapi_pct(), 0.0);
    assert!(a1_coverage(&index, &[]).is_err());
}

#[test]
fn a1_coverage_matches_brute_force() {
    let docs = synthetic_collection(
        &SyntheticSpec {
            num_docs: 40,
            background: 60,
            planted: 5,
            min_len: 5,
            max_len: 60,
        },
        3,
    );
    let index = PositionalIndex::build(docs.clone(), AnalyzerConfig::default()).unwrap();
    let queries: Vec<Query> = ["w00", "w01 t0003", "t0010 t0010", "nothing"]
        .iter()
        .map(|q| Query::new("q", q.split(' ')))
        .collect();
    let cov = a1_coverage(&index, &queries).unwrap();

    let toks: Vec<Vec<&str>> = docs.iter().map(|(_, t)| t.split(' ').collect()).collect();
    let total: usize = toks.iter().map(Vec::len).sum();
    let (mut sat, mut pairs, mut terms, mut okapi) = (0u64, 0u64, 0u64, 0u64);
    for q in &queries {
        let mut seen = Vec::new();
        for w in q.terms() {
            if seen.contains(&w) {
                continue;
            }
            seen.push(w);
            let cf: usize = toks.iter().map(|d| d.iter().filter(|t| **t == w).count()).sum();
            if cf == 0 {
                continue;
            }
            let df = toks.iter().filter(|d| d.contains(&w)).count();
            terms += 1;
            okapi += u64::from(2 * df <= toks.len());
            for d in &toks {
                let c = d.iter().filter(|t| **t == w).count();
                if c > 0 {
                    pairs += 1;
                    sat += u64::from(c as f64 / d.len() as f64 >= cf as f64 / total as f64);
                }
            }
        }
    }
    assert_eq!(
        (cov.dp_satisfied, cov.dp_pairs, cov.okapi_satisfied, cov.okapi_terms),
        (sat, pairs, okapi, terms)
    );
}

#[test]
fn synthetic_collection_is_deterministic() {
    let spec = SyntheticSpec::default();
    let a = synthetic_collection(&spec, 11);
    assert_eq!(a, synthetic_collection(&spec, 11));
    assert_ne!(a, synthetic_collection(&spec, 12));
    assert_eq!(a.len(), spec.num_docs as usize);
    assert!(a.iter().all(|(_, t)| !t.is_empty()));
}

fn small_bench() -> AxiomBench {
    let spec = SyntheticSpec {
        num_docs: 120,
        ..SyntheticSpec::default()
    };
    AxiomBench::synthetic(&spec, 5).unwrap()
}

#[test]
fn bench_records_meet_recipes() {
    let bench = small_bench();
    let m = ScopeMeasure::EntropyPower;
    for recipe in [Recipe::VPan, Recipe::SPan, Recipe::VPls, Recipe::SPls, Recipe::Par] {
        let (records, _) = bench.records(recipe, 60, Some(m));
        assert_eq!(records.len(), 60, "{recipe:?}");
        for r in &records {
            assert!(r.postconditions_hold());
            assert_eq!(r.kind, recipe.kind());
            assert!(r.context(bench.index(), m).a1());
            let ty = r.classify(m);
            match recipe {
                Recipe::VPan | Recipe::VPls => assert!(ty.v_type),
                Recipe::SPan | Recipe::SPls => assert!(ty.s_type),
                Recipe::Par => {}
            }
        }
        assert_eq!(bench.make_record(recipe, 9), bench.make_record(recipe, 9));
    }
}

#[test]
fn small_bench_passes() {
    let bench = small_bench();
    let config = BenchConfig {
        records: 120,
        ..BenchConfig::default()
    };
    let report = run_bench(&bench, &config).unwrap();
    let failing: Vec<String> = report
        .cells
        .iter()
        .filter(|c| c.asserted && !c.all_pass())
        .map(|c| format!("{c:?}"))
        .chain(
            report
                .behavior
                .iter()
                .filter(|b| !b.all_agree())
                .map(|b| format!("{b:?}")),
        )
        .collect();
    assert!(failing.is_empty(), "{}", failing.join("\n"));
    assert!(report.all_asserted_pass());
    assert!(report.behavior.iter().filter(|b| b.constructed).all(|b| b.checks > 0));
    assert!(report.to_text().contains("LNC2"));
}

fn rare_word_index() -> PositionalIndex {
    PositionalIndex::build(
        (0..40).map(|i| (format!("d{i}"), format!("t{} t{} t{} x{}", i % 7, i % 11, i % 5, i))),
        AnalyzerConfig::default(),
    )
    .unwrap()
}

fn entropy_scorers(index: &PositionalIndex) -> Vec<Scorer> {
    [
        ScoringConfig::dp(100.0),
        ScoringConfig::dp(5000.0),
        ScoringConfig::okapi(1.2, 0.75),
        ScoringConfig::okapi(2.5, 0.9),
        ScoringConfig::okapi(0.3, 0.05),
    ]
    .into_iter()
    .map(|c| Scorer::new(c.with_vn(ScopeMeasure::EntropyPower), index).unwrap())
    .collect()
}

fn c4_at(index: &PositionalIndex, doc: &[TermId], w: TermId) -> bool {
    let r = record(
        PerturbationKind::Par,
        1,
        w,
        doc.to_vec(),
        apply_par(doc, &[w], &w, 1).unwrap(),
    );
    eval_condition(Condition::C4, &r.context(index, ScopeMeasure::EntropyPower))
        .unwrap()
        .is_true()
}

/// Under EntropyPower, C4 on d gives TF-LNC for one added occurrence, and
/// for K added occurrences when C4 also holds on every intermediate document.
#[test]
fn c4_sufficiency_numeric() {
    let index = rare_word_index();
    let w = index.term_id("x0").unwrap();
    let q = record_query(&index, w).unwrap();
    let scorers = entropy_scorers(&index);
    let mut checks = 0;
    for c in 1..8u32 {
        for others in [
            &[1u32][..],
            &[3],
            &[1, 1, 1],
            &[2, 5],
            &[10, 1, 1],
            &[1; 12],
            &[40, 2],
            &[7, 7, 7, 7],
        ] {
            let doc = doc_from(c, others, w);
            for k in 1..10 {
                let chain = (0..k).all(|j| c4_at(&index, &doc_from(c + j, others, w), w));
                if !chain {
                    continue;
                }
                let r = record(
                    PerturbationKind::Par,
                    k,
                    w,
                    doc.clone(),
                    apply_par(&doc, &[w], &w, k).unwrap(),
                );
                for s in &scorers {
                    checks += 1;
                    assert!(
                        check_constraint(Constraint::TfLnc, s, &q, &r, None).unwrap().holds,
                        "{r:?} {}",
                        s.config()
                    );
                }
            }
        }
    }
    assert!(checks > 200);
}

/// C4 on the unperturbed document alone does not carry over to large K:
/// [w w o] satisfies C4 but [w w w w o] does not, and VN-DP then scores
/// [w w o] above [w w o w^7].
#[test]
fn c4_on_start_only_can_fail_for_large_k() {
    let index = rare_word_index();
    let w = index.term_id("x0").unwrap();
    let q = record_query(&index, w).unwrap();
    let o = TermId(1000);
    let doc = vec![w, w, o];
    assert!(c4_at(&index, &doc, w));
    assert!(!c4_at(&index, &[w, w, w, w, o], w));
    let r = record(
        PerturbationKind::Par,
        7,
        w,
        doc.clone(),
        apply_par(&doc, &[w], &w, 7).unwrap(),
    );
    let s = Scorer::new(ScoringConfig::dp(100.0).with_vn(ScopeMeasure::EntropyPower), &index).unwrap();
    let out = check_constraint(Constraint::TfLnc, &s, &q, &r, None).unwrap();
    assert!(!out.holds && out.score_delta < 0.0);
}

fn counts_strategy() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(1u32..12, 1..8)
}

fn doc_from(c: u32, others: &[u32], w: TermId) -> Vec<TermId> {
    let mut doc = vec![w; c as usize];
    for (j, &n) in others.iter().enumerate() {
        doc.extend(std::iter::repeat_n(TermId(1000 + j as u32), n as usize));
    }
    doc
}

proptest! {
    #[test]
    fn operator_postconditions(c in 1u32..6, others in counts_strategy(), k in 1u32..6, seed in any::<u64>()) {
        let w = TermId(0);
        let doc = doc_from(c, &others, w);
        let noise: Vec<TermId> = (0..k).map(|i| TermId(2000 + i)).collect();
        let pan = apply_pan(&doc, &[w], k, &noise).unwrap();
        let pool: Vec<TermId> = (0..20).map(|i| TermId(1000 + i)).collect();
        let pls = apply_pls(&doc, &[w], k, seed, &pool).unwrap();
        let par = apply_par(&doc, &[w], &w, k).unwrap();
        for (kind, p) in [(PerturbationKind::Pan, pan), (PerturbationKind::Pls, pls), (PerturbationKind::Par, par)] {
            prop_assert!(record(kind, k, w, doc.clone(), p).postconditions_hold());
        }
    }

    #[test]
    fn uniq_and_lengthpower_tf_lnc(c in 1u32..6, others in counts_strategy(), k in 1u32..10, beta in 0.0f64..=1.0) {
        let index = rare_word_index();
        let w = index.term_id("x0").unwrap();
        let q = record_query(&index, w).unwrap();
        let doc = doc_from(c, &others, w);
        let r = record(PerturbationKind::Par, k, w, doc.clone(), apply_par(&doc, &[w], &w, k).unwrap());
        for m in [ScopeMeasure::UniqLength, ScopeMeasure::length_power(beta).unwrap()] {
            for cfg in [ScoringConfig::dp(50.0), ScoringConfig::okapi(1.2, 0.75)] {
                let s = Scorer::new(cfg.with_vn(m), &index).unwrap();
                prop_assert!(check_constraint(Constraint::TfLnc, &s, &q, &r, None).unwrap().holds);
            }
        }
    }

    #[test]
    fn pls_classification_flags(c in 1u32..4, others in counts_strategy(), k in 2u32..5, seed in any::<u64>()) {
        let w = TermId(0);
        let doc = doc_from(c, &others, w);
        // A single replacement word collapses scope; fresh words spread it.
        let narrow = apply_pls(&doc, &[w], k, seed, &[TermId(5000)]).unwrap();
        let wide_pool: Vec<TermId> = (0..200 * doc.len() as u32).map(|i| TermId(6000 + i)).collect();
        let wide = apply_pls(&doc, &[w], k, seed, &wide_pool).unwrap();
        prop_assert!(classify(&doc, &narrow, ScopeMeasure::UniqLength).v_type);
        prop_assert!(classify(&doc, &narrow, ScopeMeasure::EntropyPower).v_type);
        let lp = ScopeMeasure::length_power(0.5).unwrap();
        prop_assert!(classify(&doc, &wide, lp).s_type);
    }
}
