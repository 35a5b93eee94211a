//! Stability certificates: the constants or per-`s` profiles that instantiate
//! one of the five stability notions, all in log form.

use std::fmt;
use std::sync::Arc;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// The five stability notions, strongest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum StabilityClass {
    #[serde(rename = "UES")]
    Ues,
    #[serde(rename = "BVES")]
    Bves,
    #[serde(rename = "ES")]
    Es,
    #[serde(rename = "S")]
    Stable,
    #[serde(rename = "EG")]
    Growth,
}

impl StabilityClass {
    pub const CHAIN: [StabilityClass; 5] =
        [StabilityClass::Ues, StabilityClass::Bves, StabilityClass::Es, StabilityClass::Stable, StabilityClass::Growth];

    pub fn tag(self) -> &'static str {
        match self {
            StabilityClass::Ues => "UES",
            StabilityClass::Bves => "BVES",
            StabilityClass::Es => "ES",
            StabilityClass::Stable => "S",
            StabilityClass::Growth => "EG",
        }
    }

    pub fn parse(tag: &str) -> Option<Self> {
        Self::CHAIN.into_iter().find(|c| c.tag().eq_ignore_ascii_case(tag))
    }

    pub fn weaker(self) -> Option<Self> {
        let i = Self::CHAIN.iter().position(|c| *c == self)?;
        Self::CHAIN.get(i + 1).copied()
    }
}

impl fmt::Display for StabilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A map `s -> log N(s)`.
#[derive(Clone)]
pub enum Profile {
    Constant(f64),
    /// `intercept + slope * s`.
    Linear {
        intercept: f64,
        slope: f64,
    },
    /// `log(1 + s)`.
    LogOnePlus,
    /// Node table `(s, log N)`, sorted by `s`; linear between nodes, flat outside.
    Table(Vec<(f64, f64)>),
    Custom {
        name: String,
        map: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl Profile {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Profile::Constant(c) => *c,
            Profile::Linear { intercept, slope } => intercept + slope * s,
            Profile::LogOnePlus => s.ln_1p(),
            Profile::Table(nodes) => table_eval(nodes, s),
            Profile::Custom { map, .. } => map(s),
        }
    }

    pub fn custom(name: impl Into<String>, map: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Profile::Custom { name: name.into(), map: Arc::new(map) }
    }
}

fn table_eval(nodes: &[(f64, f64)], s: f64) -> f64 {
    match nodes.binary_search_by(|(k, _)| k.total_cmp(&s)) {
        Ok(i) => nodes[i].1,
        Err(0) => nodes.first().map_or(f64::NAN, |n| n.1),
        Err(i) if i == nodes.len() => nodes[i - 1].1,
        Err(i) => {
            let (s0, v0) = nodes[i - 1];
            let (s1, v1) = nodes[i];
            v0 + (v1 - v0) * (s - s0) / (s1 - s0)
        }
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Constant(c) => write!(f, "Constant({c})"),
            Profile::Linear { intercept, slope } => write!(f, "Linear({intercept} + {slope}·s)"),
            Profile::LogOnePlus => f.write_str("LogOnePlus"),
            Profile::Table(n) => write!(f, "Table({} nodes)", n.len()),
            Profile::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl Serialize for Profile {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = serializer.serialize_map(None)?;
        match self {
            Profile::Constant(c) => {
                m.serialize_entry("kind", "constant")?;
                m.serialize_entry("log_value", c)?;
            }
            Profile::Linear { intercept, slope } => {
                m.serialize_entry("kind", "linear")?;
                m.serialize_entry("intercept", intercept)?;
                m.serialize_entry("slope", slope)?;
            }
            Profile::LogOnePlus => m.serialize_entry("kind", "log1p")?,
            Profile::Table(nodes) => {
                m.serialize_entry("kind", "table")?;
                let rows: Vec<[f64; 2]> = nodes.iter().map(|(s, v)| [*s, *v]).collect();
                m.serialize_entry("nodes", &rows)?;
            }
            Profile::Custom { name, .. } => {
                m.serialize_entry("kind", "custom")?;
                m.serialize_entry("name", name)?;
            }
        }
        m.end()
    }
}

/// A claimed stability certificate, with every constant in log form
/// (`log_n = log N`, profiles give `log N(s)`).
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "class")]
pub enum Certificate {
    /// `‖Φ(t,s,x)v‖ ≤ N e^{-α(t-s)} ‖v‖`.
    #[serde(rename = "UES")]
    Ues { log_n: f64, alpha: f64 },
    /// `‖Φ(t,s,x)v‖ ≤ N e^{-αt} e^{βs} ‖v‖`.
    #[serde(rename = "BVES")]
    Bves { log_n: f64, alpha: f64, beta: f64 },
    /// `‖Φ(t,s,x)v‖ ≤ N(s) e^{-αt} ‖v‖`.
    #[serde(rename = "ES")]
    Es { log_n: Profile, alpha: f64 },
    /// `‖Φ(t,s,x)v‖ ≤ N(s) ‖v‖`.
    #[serde(rename = "S")]
    Stable { log_n: Profile },
    /// `‖Φ(t,s,x)v‖ ≤ M(s) e^{ω(t-s)} ‖v‖` with `ω(r) = omega · r`.
    #[serde(rename = "EG")]
    Growth { log_m: Profile, omega: f64 },
}

const CONSTRAINT_SLACK: f64 = 1e-12;

impl Certificate {
    pub fn class(&self) -> StabilityClass {
        match self {
            Certificate::Ues { .. } => StabilityClass::Ues,
            Certificate::Bves { .. } => StabilityClass::Bves,
            Certificate::Es { .. } => StabilityClass::Es,
            Certificate::Stable { .. } => StabilityClass::Stable,
            Certificate::Growth { .. } => StabilityClass::Growth,
        }
    }

    /// Upper bound on `log(‖Φ(t,s,x)v‖/‖v‖)` asserted by the certificate.
    pub fn log_bound(&self, t: f64, s: f64) -> f64 {
        match self {
            Certificate::Ues { log_n, alpha } => log_n - alpha * (t - s),
            Certificate::Bves { log_n, alpha, beta } => log_n - alpha * t + beta * s,
            Certificate::Es { log_n, alpha } => log_n.eval(s) - alpha * t,
            Certificate::Stable { log_n } => log_n.eval(s),
            Certificate::Growth { log_m, omega } => log_m.eval(s) + omega * (t - s),
        }
    }

    /// Checks the sign and ordering constraints on the constants; profiles are
    /// checked at the sampled `s` values.
    pub fn validate(&self, s_samples: &[f64]) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidCertificate(m));
        let profile_ok = |p: &Profile, what: &str| -> Result<()> {
            for &s in s_samples {
                let v = p.eval(s);
                if !(v >= -CONSTRAINT_SLACK) {
                    return Err(Error::InvalidCertificate(format!(
                        "{what}(s) must map into [1, ∞); log {what}({s}) = {v}"
                    )));
                }
            }
            Ok(())
        };
        match self {
            Certificate::Ues { log_n, alpha } => {
                if !(*log_n >= 0.0) {
                    return bad(format!("constant N ≥ 1 required, got log N = {log_n}"));
                }
                if !(*alpha > 0.0 && alpha.is_finite()) {
                    return bad(format!("constant α > 0 required, got α = {alpha}"));
                }
            }
            Certificate::Bves { log_n, alpha, beta } => {
                if !(*log_n >= 0.0) {
                    return bad(format!("constant N ≥ 1 required, got log N = {log_n}"));
                }
                if !(*alpha > 0.0 && alpha.is_finite()) {
                    return bad(format!("constant α > 0 required, got α = {alpha}"));
                }
                if !(*beta >= *alpha && beta.is_finite()) {
                    return bad(format!("constants β ≥ α required, got α = {alpha}, β = {beta}"));
                }
            }
            Certificate::Es { log_n, alpha } => {
                if !(*alpha > 0.0 && alpha.is_finite()) {
                    return bad(format!("constant α > 0 required, got α = {alpha}"));
                }
                profile_ok(log_n, "N")?;
            }
            Certificate::Stable { log_n } => profile_ok(log_n, "N")?,
            Certificate::Growth { log_m, omega } => {
                if !(*omega >= 0.0 && omega.is_finite()) {
                    return bad(format!("ω must be nondecreasing (slope ≥ 0), got {omega}"));
                }
                profile_ok(log_m, "M")?;
            }
        }
        Ok(())
    }

    /// Certificate of the next weaker class implied by this one:
    /// UES(N,α) → BVES(N,α,α) → ES(N e^{βs}, α) → S(N(s)) → EG(N(s), ω ≡ 0).
    pub fn weaken(&self) -> Option<Certificate> {
        match self {
            Certificate::Ues { log_n, alpha } => Some(Certificate::Bves { log_n: *log_n, alpha: *alpha, beta: *alpha }),
            Certificate::Bves { log_n, alpha, beta } => {
                Some(Certificate::Es { log_n: Profile::Linear { intercept: *log_n, slope: *beta }, alpha: *alpha })
            }
            Certificate::Es { log_n, .. } => Some(Certificate::Stable { log_n: log_n.clone() }),
            Certificate::Stable { log_n } => Some(Certificate::Growth { log_m: log_n.clone(), omega: 0.0 }),
            Certificate::Growth { .. } => None,
        }
    }
}
