//! Concrete systems with known stability behaviour, addressable by id
//! (`exp-sin`, `spike`, `spike-literal`, `subexp`, `growth`, `pure-decay:<λ>`).
//!
//! Every example is a ratio-form scalar cocycle built from `log u`:
//! plain `u(s)/u(t)`, decay-weighted `u(s)e^s / (u(t)e^t)` or growth-weighted
//! `u(s)e^t / (u(t)e^s)`.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::certificate::{Certificate, Profile, StabilityClass};
use crate::error::{Error, Result};
use crate::semiflow::{Cocycle, Semiflow, SkewEvolutionSystem};

/// Default number of witness-family members materialized.
pub const DEFAULT_N_MAX: u32 = 40;

/// Spike node values are frozen beyond this index to stay inside `f64` range.
const SPIKE_NODE_CAP: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RatioForm {
    /// `u(s)/u(t)`.
    Plain,
    /// `u(s)e^s / (u(t)e^t)`.
    DecayWeighted,
    /// `u(s)e^t / (u(t)e^s)`.
    GrowthWeighted,
}

impl RatioForm {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "plain" => Some(RatioForm::Plain),
            "decay-weighted" => Some(RatioForm::DecayWeighted),
            "growth-weighted" => Some(RatioForm::GrowthWeighted),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RatioForm::Plain => "plain",
            RatioForm::DecayWeighted => "decay-weighted",
            RatioForm::GrowthWeighted => "growth-weighted",
        }
    }
}

/// Expected position in the stability chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExpectedClass {
    #[serde(rename = "u.e.s.")]
    Ues,
    #[serde(rename = "BV.e.s.-not-u.e.s.")]
    BvesNotUes,
    #[serde(rename = "e.s.-not-BV.e.s.")]
    EsNotBves,
    #[serde(rename = "s.-not-e.s.")]
    StableNotEs,
    #[serde(rename = "e.g.-not-s.")]
    GrowthNotStable,
}

impl ExpectedClass {
    /// Strongest class the system belongs to.
    pub fn strongest(self) -> StabilityClass {
        match self {
            ExpectedClass::Ues => StabilityClass::Ues,
            ExpectedClass::BvesNotUes => StabilityClass::Bves,
            ExpectedClass::EsNotBves => StabilityClass::Es,
            ExpectedClass::StableNotEs => StabilityClass::Stable,
            ExpectedClass::GrowthNotStable => StabilityClass::Growth,
        }
    }
}

/// Parametric family of `(t, s)` points on which a stronger class fails,
/// materialized for `n = n_start ..= n_max`.
#[derive(Clone)]
pub struct WitnessFamily {
    pub description: String,
    n_start: u32,
    generator: Arc<dyn Fn(u32) -> Vec<(f64, f64)> + Send + Sync>,
}

impl fmt::Debug for WitnessFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WitnessFamily({})", self.description)
    }
}

impl WitnessFamily {
    pub fn new(
        description: impl Into<String>,
        n_start: u32,
        generator: impl Fn(u32) -> Vec<(f64, f64)> + Send + Sync + 'static,
    ) -> Self {
        Self { description: description.into(), n_start, generator: Arc::new(generator) }
    }

    /// Family members with `t <= horizon`; members whose `t` rounds onto `s` are dropped.
    pub fn materialize(&self, n_max: u32, horizon: f64) -> Vec<(f64, f64)> {
        (self.n_start..=n_max)
            .flat_map(|n| (self.generator)(n))
            .filter(|(t, s)| *t <= horizon && *t > *s && *s >= 0.0)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct GallerySystem {
    pub id: String,
    pub system: SkewEvolutionSystem,
    pub expected_class: Option<ExpectedClass>,
    pub known_certificate: Option<Certificate>,
    pub witness_family: Option<WitnessFamily>,
    /// Modelling choices that are not forced by the defining properties.
    pub notes: Vec<String>,
}

type LogU = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Ratio-form scalar cocycle from `log u` over the given semiflow.
pub fn ratio_system(label: &str, semiflow: Semiflow, u_log: LogU, form: RatioForm) -> SkewEvolutionSystem {
    let g: crate::semiflow::ScalarLogMap = match form {
        RatioForm::Plain => Arc::new(move |t: f64, s: f64, _x: f64| u_log(s) - u_log(t)),
        RatioForm::DecayWeighted => Arc::new(move |t: f64, s: f64, _x: f64| (u_log(s) - u_log(t)) + (s - t)),
        RatioForm::GrowthWeighted => Arc::new(move |t: f64, s: f64, _x: f64| (u_log(s) - u_log(t)) + (t - s)),
    };
    SkewEvolutionSystem::new(label, semiflow, Cocycle::ScalarLog(g))
}

/// Ratio-form system over the translation semiflow `φ(t,s,x) = t - s + x`.
pub fn translation_system(u_log: impl Fn(f64) -> f64 + Send + Sync + 'static, form: RatioForm) -> GallerySystem {
    let system = ratio_system("translation", Semiflow::Translation, Arc::new(u_log), form);
    GallerySystem {
        id: format!("translation/{}", form.name()),
        system,
        expected_class: None,
        known_certificate: None,
        witness_family: None,
        notes: Vec::new(),
    }
}

/// `u(t) = e^{2t - t sin t}`, plain ratio, translation semiflow.
pub fn exp_sin_system() -> GallerySystem {
    let system =
        ratio_system("exp-sin", Semiflow::Translation, Arc::new(|t: f64| 2.0 * t - t * t.sin()), RatioForm::Plain)
            .with_max_panel(PI / 8.0);
    let family = WitnessFamily::new("t = 2nπ + π/2, s = 2nπ (and t = 2nπ + 5π/2, s = 2nπ + 3π/2)", 0, |n| {
        let base = 2.0 * n as f64 * PI;
        vec![(base + PI / 2.0, base), (base + 2.5 * PI, base + 1.5 * PI)]
    });
    GallerySystem {
        id: "exp-sin".into(),
        system,
        expected_class: Some(ExpectedClass::BvesNotUes),
        // log gain ≤ |t| + |s| + 2s - 2t = 3s - t
        known_certificate: Some(Certificate::Bves { log_n: 0.0, alpha: 1.0, beta: 3.0 }),
        witness_family: Some(family),
        notes: vec!["u(t) = exp(2t - t sin t)".into()],
    }
}

/// Growth law of the spike function at its integer nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpikeGrowth {
    /// `log u(n) = n · 2^{2n}`.
    SuperExponential,
    /// `u(n) = n · 2^{2n}`.
    Literal,
}

impl SpikeGrowth {
    fn node(self, n: f64) -> f64 {
        if n <= 0.0 {
            return 0.0;
        }
        let n = n.min(SPIKE_NODE_CAP);
        match self {
            SpikeGrowth::SuperExponential => n * 4f64.powf(n),
            SpikeGrowth::Literal => n.ln() + 2.0 * n * LN_2,
        }
    }
}

/// `log u` of the spike function: node values at integers `n ≥ 1`, `u = 1`
/// at `n + 2^{-2n}`, linear in log space between consecutive nodes, and
/// linear from `log u(0) = 0` on `[0, 1]`.
pub fn spike_log_u(growth: SpikeGrowth, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t < 1.0 {
        return t * growth.node(1.0);
    }
    let n = t.floor();
    let frac = t - n;
    let delta = 0.25f64.powf(n);
    if frac < delta {
        growth.node(n) * (1.0 - frac / delta)
    } else {
        growth.node(n + 1.0) * ((frac - delta) / (1.0 - delta))
    }
}

fn spike_breakpoints(lo: f64, hi: f64) -> Vec<f64> {
    let mut pts = Vec::new();
    let first = lo.max(1.0).floor() as i64;
    let last = hi.floor().min(1e6) as i64;
    for n in first..=last {
        let nf = n as f64;
        pts.push(nf);
        let dip = nf + 0.25f64.powf(nf);
        if dip > nf {
            pts.push(dip);
        }
    }
    pts
}

/// Spike system: decay-weighted ratio over the constant semiflow `φ(t,s,x) = x`.
pub fn spike_system_with(growth: SpikeGrowth) -> GallerySystem {
    let id = match growth {
        SpikeGrowth::SuperExponential => "spike",
        SpikeGrowth::Literal => "spike-literal",
    };
    let system =
        ratio_system(id, Semiflow::Constant, Arc::new(move |t| spike_log_u(growth, t)), RatioForm::DecayWeighted)
            .with_breakpoints(Arc::new(spike_breakpoints));
    let family = WitnessFamily::new("t = n + 2^{-2n}, s = n", 1, |n| {
        let nf = n as f64;
        vec![(nf + 0.25f64.powf(nf), nf)]
    });
    let (expected, note) = match growth {
        SpikeGrowth::SuperExponential => {
            (ExpectedClass::EsNotBves, "log u(n) = n·2^(2n), u(n + 2^(-2n)) = 1, log u piecewise linear between nodes")
        }
        SpikeGrowth::Literal => {
            (ExpectedClass::BvesNotUes, "u(n) = n·2^(2n), u(n + 2^(-2n)) = 1, log u piecewise linear between nodes")
        }
    };
    GallerySystem {
        id: id.into(),
        system,
        expected_class: Some(expected),
        known_certificate: Some(Certificate::Es {
            log_n: Profile::custom("log u(s) + s", move |s| spike_log_u(growth, s) + s),
            alpha: 1.0,
        }),
        witness_family: Some(family),
        notes: vec![note.into()],
    }
}

pub fn spike_system() -> GallerySystem {
    spike_system_with(SpikeGrowth::SuperExponential)
}

/// `u(t) = 1 + t`, plain ratio.
pub fn subexp_system() -> GallerySystem {
    let system = ratio_system("subexp", Semiflow::Translation, Arc::new(f64::ln_1p), RatioForm::Plain);
    GallerySystem {
        id: "subexp".into(),
        system,
        expected_class: Some(ExpectedClass::StableNotEs),
        known_certificate: Some(Certificate::Stable { log_n: Profile::LogOnePlus }),
        witness_family: None,
        notes: vec!["u(t) = 1 + t".into()],
    }
}

/// `u(t) = 1 + t`, growth-weighted ratio.
pub fn growth_system() -> GallerySystem {
    let system = ratio_system("growth", Semiflow::Translation, Arc::new(f64::ln_1p), RatioForm::GrowthWeighted);
    GallerySystem {
        id: "growth".into(),
        system,
        expected_class: Some(ExpectedClass::GrowthNotStable),
        known_certificate: Some(Certificate::Growth { log_m: Profile::LogOnePlus, omega: 1.0 }),
        witness_family: None,
        notes: vec!["u(t) = 1 + t".into()],
    }
}

/// `Φ(t,s,x) = e^{-λ(t-s)}`.
pub fn pure_decay_system(lambda: f64) -> Result<GallerySystem> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("decay rate λ must be positive, got {lambda}")));
    }
    let system = SkewEvolutionSystem::new(
        format!("pure-decay:{lambda}"),
        Semiflow::Translation,
        Cocycle::ScalarLog(Arc::new(move |t: f64, s: f64, _| -lambda * (t - s))),
    );
    Ok(GallerySystem {
        id: format!("pure-decay:{lambda}"),
        system,
        expected_class: Some(ExpectedClass::Ues),
        known_certificate: Some(Certificate::Ues { log_n: 0.0, alpha: lambda }),
        witness_family: None,
        notes: Vec::new(),
    })
}

/// Looks a system up by its stable identifier.
pub fn by_id(id: &str) -> Result<GallerySystem> {
    match id {
        "exp-sin" => Ok(exp_sin_system()),
        "spike" => Ok(spike_system()),
        "spike-literal" => Ok(spike_system_with(SpikeGrowth::Literal)),
        "subexp" => Ok(subexp_system()),
        "growth" => Ok(growth_system()),
        _ => {
            if let Some(rate) = id.strip_prefix("pure-decay:") {
                let lambda: f64 = rate.parse().map_err(|_| Error::UnknownSystem(id.into()))?;
                return pure_decay_system(lambda);
            }
            Err(Error::UnknownSystem(id.into()))
        }
    }
}

/// The five chain representatives.
pub fn standard_gallery() -> Vec<GallerySystem> {
    vec![
        pure_decay_system(2.0).expect("positive rate"),
        exp_sin_system(),
        spike_system(),
        subexp_system(),
        growth_system(),
    ]
}
