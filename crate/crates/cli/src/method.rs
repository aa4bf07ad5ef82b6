//! Parsing of model names and tuning method specs.

use anyhow::{bail, Context, Result};
use clap::ValueEnum;

use vnorm::scope::ScopeMeasure;
use vnorm::scoring::{KPolicy, MrfParams, ScoringConfig, VnConfig};
use vnorm::tuning::{Family, Method, ScopeChoice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    Dp,
    Jm,
    Okapi,
    Mrf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KPolicyArg {
    Unit,
    Avgv,
}

/// Flag values that make up one scoring configuration.
#[derive(Debug, Clone)]
pub struct ModelFlags {
    pub model: ModelName,
    pub scope: Option<String>,
    pub beta: Option<f64>,
    pub mu: f64,
    pub lambda: f64,
    pub k1: f64,
    pub b: f64,
    pub k3: f64,
    pub delta: Option<f64>,
    pub lambdas: Option<Vec<f64>>,
    pub k_policy: KPolicyArg,
}

/// `--scope` and `--beta` together. `--beta` alone means LengthPower;
/// `--scope lengthpower` takes its β from `--beta`.
pub fn scope_measure(scope: Option<&str>, beta: Option<f64>) -> Result<Option<ScopeMeasure>> {
    let m = match (scope.map(|s| s.trim().to_ascii_lowercase()), beta) {
        (None, None) => return Ok(None),
        (None, Some(b)) => ScopeMeasure::length_power(b)?,
        (Some(s), Some(b)) if s == "lengthpower" => ScopeMeasure::length_power(b)?,
        (Some(s), Some(_)) if !s.starts_with("lengthpower") => {
            bail!("--beta only applies to the lengthpower scope, not `{s}`")
        }
        (Some(s), _) => s.parse()?,
    };
    Ok(Some(m))
}

pub fn mrf_lambdas(lambdas: Option<&[f64]>) -> Result<[f64; 3]> {
    match lambdas {
        None => Ok(MrfParams::DEFAULT_LAMBDAS),
        Some(&[t, o, u]) => Ok([t, o, u]),
        Some(v) => bail!("--lambdas takes three comma-separated weights, got {}", v.len()),
    }
}

impl ModelFlags {
    pub fn config(&self) -> Result<ScoringConfig> {
        let mut config = match self.model {
            ModelName::Dp => ScoringConfig::dp(self.mu),
            ModelName::Jm => ScoringConfig::jm(self.lambda),
            ModelName::Okapi => {
                let mut c = ScoringConfig::okapi(self.k1, self.b);
                if let vnorm::scoring::Model::Okapi(p) = &mut c.model {
                    p.k3 = self.k3;
                }
                c
            }
            ModelName::Mrf => ScoringConfig::mrf(MrfParams::new(mrf_lambdas(self.lambdas.as_deref())?, self.mu)),
        };
        if self.lambdas.is_some() && self.model != ModelName::Mrf {
            bail!("--lambdas only applies to --model mrf");
        }
        let measure = scope_measure(self.scope.as_deref(), self.beta)?;
        match measure {
            Some(m) => {
                let k_policy = match self.k_policy {
                    KPolicyArg::Unit => KPolicy::Unit,
                    KPolicyArg::Avgv => KPolicy::AvgvRescale,
                };
                config = config.with_vn_config(VnConfig { measure: m, k_policy });
            }
            None if self.k_policy == KPolicyArg::Avgv => bail!("--k-policy avgv needs a lengthpower --scope"),
            None => {}
        }
        if let Some(d) = self.delta {
            config = config.with_delta(d);
        }
        config.validate()?;
        Ok(config)
    }
}

/// Parses `[vn-]family[+][:scope[:beta]]`, e.g. `dp`, `okapi+`,
/// `vn-dp:entropypower`, `vn-okapi+:lengthpower` (β tuned) or
/// `vn-mrf:lengthpower:0.5`.
pub fn parse_method(spec: &str) -> Result<Method> {
    let lower = spec.trim().to_ascii_lowercase();
    let mut parts = lower.splitn(2, ':');
    let head = parts.next().unwrap_or_default();
    let scope = parts.next();
    let (vn, head) = match head.strip_prefix("vn-") {
        Some(rest) => (true, rest),
        None => (false, head),
    };
    let (plus, head) = match head.strip_suffix('+') {
        Some(rest) => (true, rest),
        None => (false, head),
    };
    let family = match head {
        "dp" => Family::Dp,
        "okapi" => Family::Okapi,
        "mrf" => Family::Mrf,
        "jm" => bail!("method `{spec}`: JM is not tuned separately (it is VN-DP with lengthpower:0)"),
        other => bail!("method `{spec}`: unknown model `{other}` (dp, okapi, mrf)"),
    };
    let mut method = Method::new(family);
    match (vn, scope) {
        (true, None) => bail!("method `{spec}` needs a scope, e.g. `{lower}:entropypower`"),
        (false, Some(_)) => bail!("method `{spec}` names a scope but is not a vn- method"),
        (true, Some(s)) => {
            let choice = match s {
                "uniqlength" => ScopeChoice::UniqLength,
                "entropypower" => ScopeChoice::EntropyPower,
                "lengthpower" => ScopeChoice::LengthPower(None),
                _ => match s.strip_prefix("lengthpower:") {
                    Some(b) => {
                        let beta: f64 = b.parse().with_context(|| format!("method `{spec}`: bad beta `{b}`"))?;
                        ScopeMeasure::length_power(beta)?;
                        ScopeChoice::LengthPower(Some(beta))
                    }
                    None => bail!("method `{spec}`: unknown scope `{s}`"),
                },
            };
            method = method.vn(choice);
        }
        (false, None) => {}
    }
    if plus {
        method = method.lower_bounded();
    }
    Ok(method)
}
