//! Document scope s(d) and verbosity v(d) = |d| / s(d).
//!
//! Three scope measures are supported:
//!
//! * `LengthPower(β)`: `|d|^β`, a Heaps-law style estimate of the number of
//!   distinct topics. β must lie in `[0, 1]`: below 0 the scope shrinks as the
//!   document grows (SC1), above 1 the verbosity shrinks (SC2). β = 1 gives
//!   `s(d) = |d|` and `v(d) = 1`, i.e. the unnormalized representation.
//! * `UniqLength`: number of distinct terms.
//! * `EntropyPower`: `exp(H(p_ml(·|d)))` with natural log, 0 for the empty
//!   document.
//!
//! The empty document has scope 0 under every measure and verbosity 1.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScopeMeasure {
    LengthPower { beta: f64 },
    UniqLength,
    EntropyPower,
}

impl ScopeMeasure {
    pub fn length_power(beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::Config(format!(
                "LengthPower beta {beta} outside [0, 1]: beta < 0 breaks SC1 (scope non-decreasing in length), \
                 beta > 1 breaks SC2 (verbosity non-decreasing in length)"
            )));
        }
        Ok(ScopeMeasure::LengthPower { beta })
    }

    pub fn validate(&self) -> Result<()> {
        if let ScopeMeasure::LengthPower { beta } = *self {
            ScopeMeasure::length_power(beta)?;
        }
        Ok(())
    }

    pub fn is_length_power(&self) -> bool {
        matches!(self, ScopeMeasure::LengthPower { .. })
    }

    /// Scope of a document summarized by `shape`.
    pub fn scope(&self, shape: &TermShape) -> f64 {
        if shape.length == 0 {
            return 0.0;
        }
        match *self {
            ScopeMeasure::LengthPower { beta: 1.0 } => shape.length as f64,
            ScopeMeasure::LengthPower { beta } => (shape.length as f64).powf(beta),
            ScopeMeasure::UniqLength => shape.unique as f64,
            ScopeMeasure::EntropyPower => shape.entropy_power,
        }
    }

    pub fn verbosity(&self, shape: &TermShape) -> f64 {
        if shape.length == 0 {
            return 1.0;
        }
        shape.length as f64 / self.scope(shape)
    }

    pub fn profile(&self, shape: &TermShape) -> DocProfile {
        DocProfile {
            length: shape.length,
            scope: self.scope(shape),
            verbosity: self.verbosity(shape),
            measure: *self,
        }
    }
}

impl FromStr for ScopeMeasure {
    type Err = Error;

    /// Accepts `lengthpower:<beta>`, `uniqlength`, `entropypower`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if let Some(beta) = lower.strip_prefix("lengthpower:") {
            let beta: f64 = beta
                .parse()
                .map_err(|_| Error::Config(format!("bad LengthPower beta in `{s}`")))?;
            return ScopeMeasure::length_power(beta);
        }
        match lower.as_str() {
            "uniqlength" => Ok(ScopeMeasure::UniqLength),
            "entropypower" => Ok(ScopeMeasure::EntropyPower),
            "lengthpower" => Err(Error::Config("lengthpower needs a beta: `lengthpower:<beta>`".into())),
            _ => Err(Error::Config(format!(
                "unknown scope measure `{s}` (expected lengthpower:<beta>|uniqlength|entropypower)"
            ))),
        }
    }
}

impl fmt::Display for ScopeMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScopeMeasure::LengthPower { beta } => write!(f, "lengthpower:{beta}"),
            ScopeMeasure::UniqLength => f.write_str("uniqlength"),
            ScopeMeasure::EntropyPower => f.write_str("entropypower"),
        }
    }
}

/// Length, distinct-term count and entropy power of one document; enough to
/// evaluate any scope measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermShape {
    pub length: u32,
    pub unique: u32,
    pub entropy_power: f64,
}

impl TermShape {
    pub const EMPTY: TermShape = TermShape {
        length: 0,
        unique: 0,
        entropy_power: 0.0,
    };

    pub fn of<T: Hash + Eq>(tokens: &[T]) -> Self {
        let mut counts: HashMap<&T, u32> = HashMap::with_capacity(tokens.len());
        for t in tokens {
            *counts.entry(t).or_insert(0) += 1;
        }
        let freqs: Vec<u32> = counts.into_values().collect();
        Self::from_counts(&freqs)
    }

    /// Builds the shape from the multiset of term frequencies (zeros ignored).
    pub fn from_counts(freqs: &[u32]) -> Self {
        let length: u32 = freqs.iter().sum();
        let unique = freqs.iter().filter(|&&c| c > 0).count() as u32;
        if length == 0 {
            return TermShape::EMPTY;
        }
        // Fixed summation order so the entropy is reproducible bit for bit.
        let mut sorted: Vec<u32> = freqs.iter().copied().filter(|&c| c > 0).collect();
        sorted.sort_unstable();
        let n = length as f64;
        let mut plogp = 0.0;
        for &c in &sorted {
            let p = c as f64 / n;
            plogp += p * p.ln();
        }
        // 1 <= exp(H) <= u(d) holds exactly; clamp away rounding at the ends.
        let entropy_power = (-plogp).exp().clamp(1.0, unique as f64);
        TermShape {
            length,
            unique,
            entropy_power,
        }
    }
}

/// Per-document length, scope and verbosity under one measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DocProfile {
    pub length: u32,
    pub scope: f64,
    pub verbosity: f64,
    pub measure: ScopeMeasure,
}

pub fn scope_value<T: Hash + Eq>(doc: &[T], measure: ScopeMeasure) -> f64 {
    measure.scope(&TermShape::of(doc))
}

pub fn verbosity<T: Hash + Eq>(doc: &[T], measure: ScopeMeasure) -> f64 {
    measure.verbosity(&TermShape::of(doc))
}

/// Verbosity-normalized term frequency `k · c(w,d) / v(d)`.
pub fn vn_term_frequency<T: Hash + Eq>(term: &T, doc: &[T], measure: ScopeMeasure, k: f64) -> f64 {
    let tf = doc.iter().filter(|t| *t == term).count() as f64;
    if doc.is_empty() {
        return 0.0;
    }
    k * tf / verbosity(doc, measure)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ABAC: [&str; 4] = ["a", "b", "a", "c"];

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn scope_examples() {
        assert_eq!(scope_value(&ABAC, ScopeMeasure::UniqLength), 3.0);
        // p = (.5, .25, .25): H = 1.5 ln 2
        assert!(close(scope_value(&ABAC, ScopeMeasure::EntropyPower), 2f64.powf(1.5)));
        assert_eq!(scope_value(&ABAC, ScopeMeasure::length_power(0.5).unwrap()), 2.0);
        let empty: [&str; 0] = [];
        for m in [
            ScopeMeasure::UniqLength,
            ScopeMeasure::EntropyPower,
            ScopeMeasure::LengthPower { beta: 0.0 },
        ] {
            assert_eq!(scope_value(&empty, m), 0.0);
            assert_eq!(verbosity(&empty, m), 1.0);
        }
    }

    #[test]
    fn verbosity_examples() {
        assert!(close(verbosity(&ABAC, ScopeMeasure::UniqLength), 4.0 / 3.0));
        assert_eq!(
            verbosity(&["a", "a", "a"], ScopeMeasure::LengthPower { beta: 1.0 }),
            1.0
        );
        assert_eq!(verbosity(&["a"], ScopeMeasure::EntropyPower), 1.0);
    }

    #[test]
    fn vn_tf_examples() {
        assert!(close(
            vn_term_frequency(&"a", &ABAC, ScopeMeasure::UniqLength, 1.0),
            1.5
        ));
        assert_eq!(
            vn_term_frequency(&"a", &ABAC, ScopeMeasure::LengthPower { beta: 1.0 }, 1.0),
            2.0
        );
        assert_eq!(vn_term_frequency(&"z", &ABAC, ScopeMeasure::EntropyPower, 1.0), 0.0);
    }

    #[test]
    fn beta_range_enforced() {
        assert!(ScopeMeasure::length_power(-0.1).is_err());
        assert!(ScopeMeasure::length_power(1.01).is_err());
        assert!("lengthpower:1.5".parse::<ScopeMeasure>().is_err());
        let msg = ScopeMeasure::length_power(2.0).unwrap_err().to_string();
        assert!(msg.contains("SC2"));
    }

    #[test]
    fn parse_and_display() {
        for s in ["lengthpower:0.25", "uniqlength", "entropypower"] {
            let m: ScopeMeasure = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert!("lengthpower".parse::<ScopeMeasure>().is_err());
        assert!("heaps".parse::<ScopeMeasure>().is_err());
    }

    #[test]
    fn uniform_distribution_entropy_hits_unique_count() {
        let doc = ["a", "b", "c", "d", "a", "b", "c", "d"];
        let shape = TermShape::of(&doc);
        assert_eq!(shape.entropy_power, 4.0);
    }
}
