use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::operators::approx_eq;
use crate::error::{Error, Result};
use crate::scope::{ScopeMeasure, TermShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    A1,
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    /// (v(d1) − v(d2))/K ≥ 1/μ, the limit of C6 for a highly topical word.
    /// Approximate only.
    C6Approx,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::A1 => "A1",
            Condition::C1 => "C1",
            Condition::C2 => "C2",
            Condition::C3 => "C3",
            Condition::C4 => "C4",
            Condition::C5 => "C5",
            Condition::C6 => "C6",
            Condition::C6Approx => "C6~",
        })
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "A1" => Condition::A1,
            "C1" => Condition::C1,
            "C2" => Condition::C2,
            "C3" => Condition::C3,
            "C4" => Condition::C4,
            "C5" => Condition::C5,
            "C6" => Condition::C6,
            "C6~" | "C6APPROX" => Condition::C6Approx,
            _ => return Err(Error::Config(format!("unknown condition `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CondResult {
    True,
    False,
    /// The condition's side assumption does not hold (C6 with p_ml(w|d1) ≤ p(w|C)).
    Inapplicable,
}

impl CondResult {
    pub fn is_true(self) -> bool {
        self == CondResult::True
    }

    fn of(b: bool) -> Self {
        if b {
            CondResult::True
        } else {
            CondResult::False
        }
    }
}

/// Everything the condition predicates look at, for one query word `w`.
///
/// `d1`/`d2` follow the constraint's naming: for PAN d2 = ψ(d1); for PLS and
/// PAR d1 = ψ(d2). A1 is judged on the unperturbed document.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionContext {
    pub d1: TermShape,
    pub d2: TermShape,
    pub c1: u32,
    pub c2: u32,
    pub k: u32,
    pub measure: ScopeMeasure,
    pub original: TermShape,
    pub c_original: u32,
    pub cf: u64,
    pub coll_len: u64,
    pub df: u32,
    pub num_docs: u32,
    pub b: Option<f64>,
    pub avgs: Option<f64>,
    pub mu: Option<f64>,
}

impl ConditionContext {
    pub fn with_okapi(mut self, b: f64, avgs: f64) -> Self {
        self.b = Some(b);
        self.avgs = Some(avgs);
        self
    }

    pub fn with_dp(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self
    }

    pub fn with_measure(mut self, measure: ScopeMeasure) -> Self {
        self.measure = measure;
        self
    }

    fn s(&self, d: &TermShape) -> f64 {
        self.measure.scope(d)
    }

    fn v(&self, d: &TermShape) -> f64 {
        self.measure.verbosity(d)
    }

    pub fn p_coll(&self) -> f64 {
        self.cf as f64 / self.coll_len as f64
    }

    /// df(w) ≤ N/2 and c(w,d) ≥ |d|·p(w|C), in exact integer arithmetic.
    pub fn a1(&self) -> bool {
        a1_okapi(self.df, self.num_docs) && a1_dp(self.c_original, self.original.length, self.cf, self.coll_len)
    }
}

pub fn a1_okapi(df: u32, num_docs: u32) -> bool {
    2 * df as u64 <= num_docs as u64
}

pub fn a1_dp(c: u32, len: u32, cf: u64, coll_len: u64) -> bool {
    c as u128 * coll_len as u128 >= len as u128 * cf as u128
}

/// a ≥ b up to the shared relative tolerance.
fn ge(a: f64, b: f64) -> bool {
    a >= b || approx_eq(a, b)
}

pub fn eval_condition(cond: Condition, ctx: &ConditionContext) -> Result<CondResult> {
    let (v1, v2) = (ctx.v(&ctx.d1), ctx.v(&ctx.d2));
    let (s1, s2) = (ctx.s(&ctx.d1), ctx.s(&ctx.d2));
    let k = ctx.k as f64;
    let missing = |what: &str| Error::Precondition(format!("{cond} needs {what}"));
    Ok(match cond {
        Condition::A1 => CondResult::of(ctx.a1()),
        Condition::C1 => CondResult::of(ge(v2, v1)),
        Condition::C2 => CondResult::of(ge(s1, s2)),
        Condition::C3 => CondResult::of(ge(k / ctx.c2 as f64, v1 / v2 - 1.0)),
        Condition::C4 => {
            let r = ctx.d2.length as f64 / ctx.c2 as f64;
            CondResult::of(ge(r * r, s2))
        }
        Condition::C5 => {
            let b = ctx.b.ok_or_else(|| missing("b"))?;
            let avgs = ctx.avgs.ok_or_else(|| missing("avgs"))?;
            if b >= 1.0 {
                CondResult::False
            } else {
                CondResult::of(ge((v1 - v2) / k, b / (1.0 - b) / avgs))
            }
        }
        Condition::C6 => {
            let mu = ctx.mu.ok_or_else(|| missing("mu"))?;
            let p = ctx.p_coll();
            let rho = ctx.c1 as f64 / ctx.d1.length as f64;
            if rho > p {
                CondResult::of(ge((v1 - v2) / k, (p + rho * s1 / mu) / (s1 * (rho - p))))
            } else {
                CondResult::Inapplicable
            }
        }
        Condition::C6Approx => {
            let mu = ctx.mu.ok_or_else(|| missing("mu"))?;
            CondResult::of(ge((v1 - v2) / k, 1.0 / mu))
        }
    })
}
