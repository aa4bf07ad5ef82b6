use std::hash::Hash;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scope::{ScopeMeasure, TermShape};

/// ψ_AN: append the first `k` terms of `noise` (none of which may be a query term).
pub fn apply_pan<T: Clone + PartialEq>(d: &[T], q: &[T], k: u32, noise: &[T]) -> Result<Vec<T>> {
    if k == 0 {
        return Err(Error::Precondition("PAN needs K >= 1".into()));
    }
    let k = k as usize;
    if noise.len() < k {
        return Err(Error::Precondition(format!(
            "noise source exhausted: K = {k} but only {} noise terms",
            noise.len()
        )));
    }
    let noise = &noise[..k];
    if noise.iter().any(|t| q.contains(t)) {
        return Err(Error::Precondition("PAN noise contains a query term".into()));
    }
    Ok(d.iter().chain(noise).cloned().collect())
}

/// ψ_LS: concatenate `d` K times, keep query-word positions and replace every
/// other position with a term drawn uniformly from `vocabulary ∖ q`.
pub fn apply_pls<T: Clone + PartialEq>(d: &[T], q: &[T], k: u32, seed: u64, vocabulary: &[T]) -> Result<Vec<T>> {
    if k == 0 {
        return Err(Error::Precondition("PLS needs K >= 1".into()));
    }
    let pool: Vec<&T> = vocabulary.iter().filter(|t| !q.contains(t)).collect();
    if pool.is_empty() {
        return Err(Error::Precondition("PLS replacement vocabulary is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(d.len() * k as usize);
    for _ in 0..k {
        for t in d {
            if q.contains(t) {
                out.push(t.clone());
            } else {
                out.push(pool[rng.gen_range(0..pool.len())].clone());
            }
        }
    }
    Ok(out)
}

/// ψ_AR: append the query word `w` K times.
pub fn apply_par<T: Clone + PartialEq>(d: &[T], q: &[T], w: &T, k: u32) -> Result<Vec<T>> {
    if k == 0 {
        return Err(Error::Precondition("PAR needs K >= 1".into()));
    }
    if !q.contains(w) {
        return Err(Error::Precondition("PAR word is not a query term".into()));
    }
    let mut out = d.to_vec();
    out.extend(std::iter::repeat_n(w.clone(), k as usize));
    Ok(out)
}

/// V-type: scope did not grow. S-type: scope did not shrink.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeClassification {
    pub v_type: bool,
    pub s_type: bool,
}

const SCOPE_RTOL: f64 = 1e-12;

pub(crate) fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= SCOPE_RTOL * a.abs().max(b.abs()).max(1.0)
}

pub fn classify_shapes(original: &TermShape, perturbed: &TermShape, m: ScopeMeasure) -> TypeClassification {
    let (s, s2) = (m.scope(original), m.scope(perturbed));
    let eq = approx_eq(s, s2);
    TypeClassification {
        v_type: eq || s2 < s,
        s_type: eq || s2 > s,
    }
}

pub fn classify<T: Hash + Eq>(original: &[T], perturbed: &[T], m: ScopeMeasure) -> TypeClassification {
    classify_shapes(&TermShape::of(original), &TermShape::of(perturbed), m)
}
