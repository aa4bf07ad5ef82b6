//! Closed-form pieces of the retrieval functions, kept free of any index
//! access so they can be checked on their own.

/// Matched-term part of Dirichlet-prior scoring,
/// `ln(1 + c(w,d) / (μ p(w|C)) · norm)`.
///
/// `norm` is `s(d)/|d|` for the verbosity-normalized model and exactly 1
/// for the original one.
#[inline]
pub fn dp_match(tf: f64, mu: f64, p_coll: f64, norm: f64) -> f64 {
    (1.0 + tf / (mu * p_coll) * norm).ln()
}

/// Document-length part `|q| · ln(μ / (x + μ))`, where `x` is `|d|` for
/// DP and `s(d)` for VN-DP.
#[inline]
pub fn dp_length_penalty(query_len: f64, x: f64, mu: f64) -> f64 {
    query_len * (mu / (x + mu)).ln()
}

/// Pseudo-frequency gap added per matched term in DP+ and VN-DP+,
/// `ln(1 + δ / (μ p(w|C)))`.
#[inline]
pub fn dp_lower_bound(delta: f64, mu: f64, p_coll: f64) -> f64 {
    (1.0 + delta / (mu * p_coll)).ln()
}

/// Jelinek-Mercer matched-term weight `ln(1 + (1-λ)/λ · c(w,d) / (|d| p(w|C)))`.
#[inline]
pub fn jm_match(tf: f64, len: f64, p_coll: f64, lambda: f64) -> f64 {
    (1.0 + (1.0 - lambda) / lambda * tf / (len * p_coll)).ln()
}

/// Robertson-Sparck Jones idf `ln((N - df + 0.5) / (df + 0.5))`, negative
/// once a term occurs in more than half the collection.
#[inline]
pub fn bm25_idf(num_docs: f64, df: f64) -> f64 {
    ((num_docs - df + 0.5) / (df + 0.5)).ln()
}

#[inline]
pub fn bm25_query_tf(qtf: f64, k3: f64) -> f64 {
    (k3 + 1.0) * qtf / (k3 + qtf)
}

/// `(k1+1) c / (k1 ((1-b) + b |d|/avgl) + c)`.
#[inline]
pub fn bm25_tf(tf: f64, len: f64, avgl: f64, k1: f64, b: f64) -> f64 {
    (k1 + 1.0) * tf / (k1 * ((1.0 - b) + b * len / avgl) + tf)
}

/// BM25 tf on the verbosity-normalized document:
/// `(k1+1) c / (k1 |d| ((1-b)/s(d) + b/avgs) + c)`.
#[inline]
pub fn vn_bm25_tf(tf: f64, len: f64, scope: f64, avgs: f64, k1: f64, b: f64) -> f64 {
    (k1 + 1.0) * tf / (k1 * len * ((1.0 - b) / scope + b / avgs) + tf)
}

/// Dirichlet-smoothed log feature `ln[(cnt + μ cnt_C / |C|) / (|d| + μ)]`.
#[inline]
pub fn mrf_feature(count: f64, coll_count: f64, coll_len: f64, len: f64, mu: f64) -> f64 {
    ((count + mu * coll_count / coll_len) / (len + mu)).ln()
}

/// `ln[(cnt / v(d) + μ cnt_C / |C|) / (s(d) + μ)]`.
#[inline]
pub fn vn_mrf_feature(count: f64, coll_count: f64, coll_len: f64, scope: f64, verbosity: f64, mu: f64) -> f64 {
    ((count / verbosity + mu * coll_count / coll_len) / (scope + mu)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bm25_tf_example() {
        // c = 2, |d| = 4, avgl = 3, k1 = 1.2, b = 0.75 -> 2.2 * 2 / 3.5
        let tf = bm25_tf(2.0, 4.0, 3.0, 1.2, 0.75);
        assert!((tf - 2.2 * 2.0 / 3.5).abs() < 1e-15);
        assert!((tf - 1.25714).abs() < 1e-5);
    }

    #[test]
    fn bm25_b_zero_ignores_length() {
        assert_eq!(bm25_tf(2.0, 4.0, 3.0, 1.2, 0.0), bm25_tf(2.0, 400.0, 3.0, 1.2, 0.0));
    }

    #[test]
    fn vn_bm25_tf_example() {
        // UniqLength s = 3, avgs = 2.5
        let tf = vn_bm25_tf(2.0, 4.0, 3.0, 2.5, 1.2, 0.75);
        let expected = 2.2 * 2.0 / (1.2 * 4.0 * (0.25 / 3.0 + 0.75 / 2.5) + 2.0);
        assert!((tf - expected).abs() < 1e-15);
        assert!((tf - 1.14583).abs() < 1e-5);
    }

    #[test]
    fn idf_negative_for_ubiquitous_terms() {
        assert!(bm25_idf(10.0, 10.0) < 0.0);
        assert_eq!(bm25_idf(10.0, 5.0), 0.0);
    }

    #[test]
    fn jm_example() {
        // λ = 0.75, c = 1, |d| = 4, p = 1/3 -> ln 1.25
        let w = jm_match(1.0, 4.0, 1.0 / 3.0, 0.75);
        assert!((w - 1.25f64.ln()).abs() < 1e-15);
    }
}
