use proptest::prelude::*;

use super::*;
use crate::analysis::AnalyzerConfig;

fn toy() -> PositionalIndex {
    PositionalIndex::build([("d1", "a b a c"), ("d2", "a b")], AnalyzerConfig::default()).unwrap()
}

fn score(config: ScoringConfig, terms: &[&str], doc: &str) -> f64 {
    score_document(config, &Query::new("q", terms.iter().copied()), &toy(), doc).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn dp_example() {
    let s = score(ScoringConfig::dp(3.0), &["b"], "d1");
    assert!(close(s, 2f64.ln() + (3.0f64 / 7.0).ln(), 1e-14));
    assert!((s - -0.15415).abs() < 5e-6);
}

#[test]
fn dp_unknown_term_leaves_length_penalty() {
    let idx = toy();
    let scorer = Scorer::new(ScoringConfig::dp(3.0), &idx).unwrap();
    let q = scorer.prepare(&Query::new("q", ["z"]), &idx).unwrap();
    assert_eq!(q.diagnostics.unknown_terms, vec!["z".to_string()]);
    let s = scorer.score(&q, &IndexedDoc { index: &idx, num: 0 });
    assert!(close(s, (3.0f64 / 7.0).ln(), 1e-15));
}

#[test]
fn empty_document_scores() {
    let idx = toy();
    let q = Query::new("q", ["b"]);
    let empty = TokenDoc::new(&[]);
    for config in [
        ScoringConfig::dp(3.0),
        ScoringConfig::dp(3.0).with_vn(ScopeMeasure::UniqLength),
        ScoringConfig::jm(0.5),
        ScoringConfig::okapi(1.2, 0.75),
    ] {
        let scorer = Scorer::new(config, &idx).unwrap();
        let pq = scorer.prepare(&q, &idx).unwrap();
        assert_eq!(scorer.score(&pq, &empty), 0.0, "{config}");
    }
}

#[test]
fn vn_dp_example() {
    let s = score(ScoringConfig::dp(3.0).with_vn(ScopeMeasure::UniqLength), &["b"], "d1");
    assert!(close(s, 1.75f64.ln() - 2f64.ln(), 1e-14));
    assert!((s - -0.13353).abs() < 5e-6);
}

#[test]
fn vn_dp_beta_one_is_dp_on_toy() {
    for doc in ["d1", "d2"] {
        for q in [&["a"][..], &["b", "a"], &["c", "c", "z"]] {
            let plain = score(ScoringConfig::dp(3.0), q, doc);
            let vn = score(
                ScoringConfig::dp(3.0).with_vn(ScopeMeasure::LengthPower { beta: 1.0 }),
                q,
                doc,
            );
            assert_eq!(plain, vn);
        }
    }
}

#[test]
fn jm_example() {
    let s = score(ScoringConfig::jm(0.75), &["b"], "d1");
    assert!(close(s, 1.25f64.ln(), 1e-15));
}

#[test]
fn okapi_tf_and_lower_bound() {
    let idx = toy();
    let n = 2.0;
    let idf = bm25_idf(n, 2.0);
    let qf = bm25_query_tf(1.0, 1000.0);
    let s = score(ScoringConfig::okapi(1.2, 0.75), &["a"], "d1");
    assert!(close(s, qf * idf * 2.2 * 2.0 / 3.5, 1e-14));
    assert!(s < 0.0, "df = N gives a negative idf");

    let plus = score(ScoringConfig::okapi(1.2, 0.75).with_delta(0.5), &["a"], "d1");
    assert!(close(plus, qf * idf * (2.2 * 2.0 / 3.5 + 0.5), 1e-14));
    assert_eq!(idx.avg_scope(ScopeMeasure::UniqLength), Some(2.5));
}

#[test]
fn vn_okapi_uses_average_scope() {
    let s = score(
        ScoringConfig::okapi(1.2, 0.75).with_vn(ScopeMeasure::UniqLength),
        &["a"],
        "d1",
    );
    let tf = 2.2 * 2.0 / (1.2 * 4.0 * (0.25 / 3.0 + 0.75 / 2.5) + 2.0);
    let expected = bm25_query_tf(1.0, 1000.0) * bm25_idf(2.0, 2.0) * tf;
    assert!(close(s, expected, 1e-14));
    assert!((tf - 1.14583).abs() < 5e-6);
}

#[test]
fn dp_plus_example() {
    let s = score(ScoringConfig::dp(3.0).with_delta(0.1), &["b"], "d1");
    let base = 2f64.ln() + (3.0f64 / 7.0).ln();
    assert!(close(s, base + 1.1f64.ln(), 1e-14));
    assert!((s - -0.05884).abs() < 5e-6);
}

#[test]
fn mrf_unigram_feature() {
    let s = score(ScoringConfig::mrf(MrfParams::new([1.0, 0.0, 0.0], 3.0)), &["b"], "d1");
    assert!(close(s, (2.0f64 / 7.0).ln(), 1e-15));
}

#[test]
fn mrf_two_terms_hand_assembled() {
    let s = score(
        ScoringConfig::mrf(MrfParams::new([0.8, 0.1, 0.1], 3.0)),
        &["a", "b"],
        "d1",
    );
    // d1 = a b a c, |C| = 6
    // f_T(a): (2 + 3*3/6)/7   f_T(b): (1 + 3*2/6)/7
    // #1(a b): 1 in d1, 2 in C   #uw8(a b): 2 in d1, 3 in C
    let ft = (3.5f64 / 7.0).ln() + (2.0f64 / 7.0).ln();
    let fo = (2.0f64 / 7.0).ln();
    let fu = (3.5f64 / 7.0).ln();
    assert!(close(s, 0.8 * ft + 0.1 * fo + 0.1 * fu, 1e-14));
}

#[test]
fn mrf_pairs_stay_inside_segments() {
    let idx = toy();
    let q = Query {
        id: "q".into(),
        kind: QueryKind::Lv,
        segments: vec![vec!["a".into()], vec!["b".into()]],
    };
    let scorer = Scorer::new(
        ScoringConfig::mrf(MrfParams::new(MrfParams::DEFAULT_LAMBDAS, 3.0)),
        &idx,
    )
    .unwrap();
    assert!(scorer.prepare(&q, &idx).unwrap().pairs.is_empty());
    let joined = scorer.prepare(&Query::new("q", ["a", "b"]), &idx).unwrap();
    assert_eq!(joined.pairs.len(), 1);
}

#[test]
fn mrf_skips_unseen_grams() {
    let idx = toy();
    let scorer = Scorer::new(ScoringConfig::mrf(MrfParams::new([0.6, 0.2, 0.2], 3.0)), &idx).unwrap();
    // "c a" never occurs in order (c is last in d1) but co-occurs in the window.
    let q = scorer.prepare(&Query::new("q", ["c", "a", "z"]), &idx).unwrap();
    assert_eq!(q.diagnostics.skipped_ordered, 2);
    assert_eq!(q.diagnostics.skipped_window, 1);
    assert_eq!(q.diagnostics.skipped_unigrams, 1);
    let s = scorer.score(&q, &IndexedDoc { index: &idx, num: 0 });
    assert!(s.is_finite());
}

#[test]
fn search_ranks_toy() {
    let hits = search_topk(&Query::new("q1", ["b"]), &toy(), ScoringConfig::dp(3.0), 1000).unwrap();
    let ids: Vec<&str> = hits.iter().map(|h| h.doc_id.as_str()).collect();
    assert_eq!(ids, ["d2", "d1"]);
    assert!(close(hits[0].score, 2f64.ln() + 0.6f64.ln(), 1e-14));
    assert!((hits[0].score - 0.18232).abs() < 5e-6);
}

#[test]
fn search_edge_cases() {
    let idx = toy();
    assert!(search_topk(&Query::new("q", ["z"]), &idx, ScoringConfig::dp(3.0), 10)
        .unwrap()
        .is_empty());
    assert!(search_topk(&Query::new("q", ["b"]), &idx, ScoringConfig::dp(3.0), 0).is_err());
    assert_eq!(
        search_topk(&Query::new("q", ["b"]), &idx, ScoringConfig::dp(3.0), 1)
            .unwrap()
            .len(),
        1
    );
    assert!(search_topk(&Query::new("q", Vec::<String>::new()), &idx, ScoringConfig::dp(3.0), 1).is_err());
}

#[test]
fn identical_documents_tie_by_id() {
    let idx = PositionalIndex::build([("z9", "x y"), ("a1", "x y"), ("m5", "x y")], AnalyzerConfig::default()).unwrap();
    let hits = search_topk(&Query::new("q", ["x"]), &idx, ScoringConfig::okapi(1.2, 0.75), 10).unwrap();
    let ids: Vec<&str> = hits.iter().map(|h| h.doc_id.as_str()).collect();
    assert_eq!(ids, ["a1", "m5", "z9"]);
}

#[test]
fn config_validation() {
    let bad = [
        ScoringConfig::dp(0.0),
        ScoringConfig::jm(1.0),
        ScoringConfig::jm(0.5).with_vn(ScopeMeasure::UniqLength),
        ScoringConfig::okapi(1.2, 1.5),
        ScoringConfig::okapi(0.0, 0.5),
        ScoringConfig::dp(3.0).with_delta(-0.1),
        ScoringConfig::jm(0.5).with_delta(0.1),
        ScoringConfig::mrf(MrfParams::new([0.5, 0.1, 0.1], 3.0)),
        ScoringConfig::mrf(MrfParams::new([0.8, 0.1, 0.1], 3.0)).with_delta(0.1),
        ScoringConfig::dp(3.0).with_vn(ScopeMeasure::LengthPower { beta: 1.2 }),
        ScoringConfig::dp(3.0).with_vn_config(VnConfig {
            measure: ScopeMeasure::UniqLength,
            k_policy: KPolicy::AvgvRescale,
        }),
    ];
    for c in bad {
        assert!(matches!(c.validate(), Err(Error::Config(_))), "{c}");
    }
    assert!(ScoringConfig::okapi(1.2, 0.75).with_delta(1.0).validate().is_ok());
}

#[test]
fn degenerate_collections() {
    let empty = PositionalIndex::build(Vec::<(String, String)>::new(), AnalyzerConfig::default()).unwrap();
    assert!(matches!(
        Scorer::new(ScoringConfig::okapi(1.2, 0.75), &empty),
        Err(Error::Degenerate(_))
    ));
    assert!(Scorer::new(
        ScoringConfig::okapi(1.2, 0.75).with_vn(ScopeMeasure::UniqLength),
        &empty
    )
    .is_err());
}

#[test]
fn config_json_shape() {
    let c = ScoringConfig::dp(2000.0)
        .with_vn(ScopeMeasure::UniqLength)
        .with_delta(0.05);
    let json = serde_json::to_value(c).unwrap();
    assert_eq!(json["model"], "dp");
    assert_eq!(json["mu"], 2000.0);
    assert_eq!(json["vn"]["measure"]["kind"], "uniqlength");
    let back: ScoringConfig = serde_json::from_value(json).unwrap();
    assert_eq!(back, c);
    let okapi: ScoringConfig = serde_json::from_str(r#"{"model":"okapi","k1":1.2,"b":0.75}"#).unwrap();
    assert_eq!(okapi, ScoringConfig::okapi(1.2, 0.75));
    assert_eq!(c.label(), "VN-DP+");
}

#[test]
fn avgv_rescale_divides_mu_and_k1() {
    assert_eq!(
        rescale(Model::Dp(DpParams { mu: 2000.0 }), 2.0),
        Model::Dp(DpParams { mu: 1000.0 })
    );
    let ok = rescale(Model::Okapi(OkapiParams::new(1.2, 0.5)), 1.0);
    assert_eq!(ok, Model::Okapi(OkapiParams::new(1.2, 0.5)));

    let idx = toy();
    let m = ScopeMeasure::LengthPower { beta: 0.5 };
    let config = ScoringConfig::dp(3.0).with_vn_config(VnConfig {
        measure: m,
        k_policy: KPolicy::AvgvRescale,
    });
    let scorer = Scorer::new(config, &idx).unwrap();
    let avgv = idx.avg_verbosity(m).unwrap();
    assert_eq!(scorer.effective_model(), Model::Dp(DpParams { mu: 3.0 / avgv }));
}

// Random corpora over a small alphabet so terms repeat and co-occur.

fn corpus_strategy() -> impl Strategy<Value = Vec<Vec<u8>>> {
    (
        prop::collection::vec(0u8..6, 1..14),
        prop::collection::vec(prop::collection::vec(0u8..6, 0..14), 0..6),
    )
        .prop_map(|(first, mut rest)| {
            rest.insert(0, first);
            rest
        })
}

fn query_strategy() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..8, 1..5)
}

fn letters(xs: &[u8]) -> Vec<String> {
    xs.iter().map(|&x| ((b'a' + x) as char).to_string()).collect()
}

fn index_of(docs: &[Vec<u8>]) -> PositionalIndex {
    let docs = docs
        .iter()
        .enumerate()
        .map(|(i, d)| (format!("d{i:02}"), letters(d)))
        .collect();
    PositionalIndex::from_tokens(docs, AnalyzerConfig::default()).unwrap()
}

fn all_scores(config: ScoringConfig, idx: &PositionalIndex, q: &Query) -> Vec<f64> {
    let scorer = Scorer::new(config, idx).unwrap();
    let pq = scorer.prepare(q, idx).unwrap();
    (0..idx.num_docs())
        .map(|num| scorer.score(&pq, &IndexedDoc { index: idx, num }))
        .collect()
}

fn base_configs() -> Vec<ScoringConfig> {
    vec![
        ScoringConfig::dp(2.5),
        ScoringConfig::dp(2.5).with_delta(0.3),
        ScoringConfig::okapi(1.2, 0.6),
        ScoringConfig::okapi(0.8, 1.0).with_delta(0.7),
        ScoringConfig::mrf(MrfParams::new([0.7, 0.2, 0.1], 4.0)),
    ]
}

/// Fixed shape, free term frequency: isolates the score as a function of c(w,d).
struct FixedShape {
    shape: TermShape,
    term: TermId,
    tf: u32,
}

impl DocView for FixedShape {
    fn shape(&self) -> TermShape {
        self.shape
    }
    fn tf(&self, t: TermId) -> u32 {
        if t == self.term {
            self.tf
        } else {
            0
        }
    }
    fn ordered(&self, _: TermId, _: TermId) -> u32 {
        0
    }
    fn window(&self, _: TermId, _: TermId, _: u32) -> u32 {
        0
    }
}

proptest! {
    #[test]
    fn vn_with_beta_one_degenerates(docs in corpus_strategy(), q in query_strategy()) {
        let idx = index_of(&docs);
        let q = Query::new("q", letters(&q));
        for config in base_configs() {
            let plain = all_scores(config, &idx, &q);
            let vn = all_scores(config.with_vn(ScopeMeasure::LengthPower { beta: 1.0 }), &idx, &q);
            for (a, b) in plain.iter().zip(&vn) {
                prop_assert!(close(*a, *b, 1e-9), "{config}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_delta_is_identity(docs in corpus_strategy(), q in query_strategy(), beta in 0.0f64..=1.0) {
        let idx = index_of(&docs);
        let q = Query::new("q", letters(&q));
        for config in [ScoringConfig::dp(3.0), ScoringConfig::okapi(1.2, 0.75)] {
            for vn in [None, Some(ScopeMeasure::UniqLength), Some(ScopeMeasure::EntropyPower), Some(ScopeMeasure::LengthPower { beta })] {
                let base = match vn { Some(m) => config.with_vn(m), None => config };
                prop_assert_eq!(all_scores(base, &idx, &q), all_scores(base.with_delta(0.0), &idx, &q));
            }
        }
    }

    #[test]
    fn delta_is_monotone(docs in corpus_strategy(), q in query_strategy(), d1 in 0.0f64..2.0, d2 in 0.0f64..2.0) {
        let idx = index_of(&docs);
        let query = Query::new("q", letters(&q));
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        for config in [ScoringConfig::dp(3.0), ScoringConfig::dp(3.0).with_vn(ScopeMeasure::UniqLength)] {
            let a = all_scores(config.with_delta(lo), &idx, &query);
            let b = all_scores(config.with_delta(hi), &idx, &query);
            let plain = all_scores(config, &idx, &query);
            for num in 0..idx.num_docs() {
                let matched = query.terms().any(|t| idx.term_frequency(t, &idx.document(num).id).unwrap() > 0);
                let i = num as usize;
                prop_assert!(a[i] <= b[i] + 1e-12);
                if !matched {
                    prop_assert_eq!(a[i], plain[i]);
                    prop_assert_eq!(b[i], plain[i]);
                }
            }
        }
        // Okapi idf may be negative, so monotonicity in delta is only claimed when idf > 0.
        let okapi = ScoringConfig::okapi(1.2, 0.75);
        let a = all_scores(okapi.with_delta(lo), &idx, &query);
        let b = all_scores(okapi.with_delta(hi), &idx, &query);
        let all_positive = query.terms().filter_map(|t| idx.term_id(t)).all(|t| 2 * idx.df(t) < idx.num_docs());
        if all_positive {
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(x <= &(y + 1e-12));
            }
        }
    }

    #[test]
    fn jm_rank_equivalent_to_vn_dp_beta_zero(docs in corpus_strategy(), q in query_strategy(), mu in 0.05f64..50.0) {
        let idx = index_of(&docs);
        let q = Query::new("q", letters(&q));
        let lambda = mu / (1.0 + mu);
        let vn = all_scores(ScoringConfig::dp(mu).with_vn(ScopeMeasure::LengthPower { beta: 0.0 }), &idx, &q);
        let jm = all_scores(ScoringConfig::jm(lambda), &idx, &q);
        let offset = q.len() as f64 * (mu / (1.0 + mu)).ln();
        for num in 0..idx.num_docs() as usize {
            if idx.shape(num as u32).length == 0 {
                continue;
            }
            prop_assert!(close(vn[num] - offset, jm[num], 1e-9));
        }
        for i in 0..jm.len() {
            for j in 0..jm.len() {
                let (li, lj) = (idx.shape(i as u32).length, idx.shape(j as u32).length);
                if li == 0 || lj == 0 || (jm[i] - jm[j]).abs() < 1e-9 {
                    continue;
                }
                prop_assert_eq!(jm[i] > jm[j], vn[i] > vn[j]);
            }
        }
    }

    #[test]
    fn mrf_unigram_only_is_dirichlet_loglikelihood(docs in corpus_strategy(), q in query_strategy(), mu in 0.5f64..100.0) {
        let idx = index_of(&docs);
        let query = Query::new("q", letters(&q));
        let mrf = all_scores(ScoringConfig::mrf(MrfParams::new([1.0, 0.0, 0.0], mu)), &idx, &query);
        let coll = idx.stats().total_length as f64;
        for num in 0..idx.num_docs() {
            let len = idx.shape(num).length as f64;
            let mut expected = 0.0;
            for t in query.terms() {
                if let Some(id) = idx.term_id(t) {
                    let c = idx.tf(id, num) as f64;
                    expected += ((c + mu * idx.cf(id) as f64 / coll) / (len + mu)).ln();
                }
            }
            prop_assert!(close(mrf[num as usize], expected, 1e-12));
        }
    }

    #[test]
    fn tf_increases_with_diminishing_returns(len in 8u32..60, unique in 2u32..8, beta in 0.0f64..=1.0) {
        // w = "a" occurs in 1 of 4 documents, so idf > 0 and p(w|C) is small.
        let idx = PositionalIndex::build(
            [("d1", "a b c d"), ("d2", "b c d e"), ("d3", "c d e f"), ("d4", "d e f g")],
            AnalyzerConfig::default(),
        ).unwrap();
        let w = idx.term_id("a").unwrap();
        let unique = unique.min(len);
        let shape = TermShape { length: len, unique, entropy_power: (unique as f64).sqrt().max(1.0) };
        let query = Query::new("q", ["a"]);
        let mut configs = vec![ScoringConfig::jm(0.7)];
        for base in [
            ScoringConfig::dp(5.0),
            ScoringConfig::dp(5.0).with_delta(0.05),
            ScoringConfig::okapi(1.2, 0.75),
            ScoringConfig::okapi(1.2, 0.75).with_delta(0.5),
            ScoringConfig::mrf(MrfParams::new([1.0, 0.0, 0.0], 5.0)),
        ] {
            configs.push(base);
            for m in [ScopeMeasure::UniqLength, ScopeMeasure::EntropyPower, ScopeMeasure::LengthPower { beta }] {
                configs.push(base.with_vn(m));
            }
        }
        for config in configs {
            let scorer = Scorer::new(config, &idx).unwrap();
            let pq = scorer.prepare(&query, &idx).unwrap();
            let at = |tf| scorer.score(&pq, &FixedShape { shape, term: w, tf });
            let values: Vec<f64> = (1..=len).map(at).collect();
            for win in values.windows(3) {
                let (d1, d2) = (win[1] - win[0], win[2] - win[1]);
                prop_assert!(d1 > 0.0 && d2 > 0.0, "{config}: not increasing");
                prop_assert!(d2 <= d1 + 1e-12, "{config}: not concave");
            }
        }
    }
}
