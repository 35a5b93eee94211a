//! Integral functionals of a skew-evolution system: weighted gain integrals
//! (Datko type), the Rolewicz and bounded-growth variants, the adjoint
//! Barbashin functional, and the stability construction from an integral
//! bound plus bounded exponential growth.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::certificate::{Certificate, Profile, StabilityClass};
use crate::error::{ensure_order, Error, Result};
use crate::grid::{GainTable, SampleGrid};
use crate::quadrature::{log_add, log_integrate, log_integrate_improper, QuadratureConfig};
use crate::semiflow::{BasePoint, SkewEvolutionSystem, StateVector};
use crate::stability::{self, CheckOutcome, FitConfig};

/// Weight `w(t)` multiplying the gain inside `∫_s^∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "rate", rename_all = "kebab-case")]
pub enum Weight {
    /// `e^{d(t-s)}`.
    Gap(f64),
    /// `e^{at}`.
    Absolute(f64),
    None,
}

impl Weight {
    fn validate(self) -> Result<()> {
        match self {
            Weight::Gap(r) | Weight::Absolute(r) if !(r >= 0.0 && r.is_finite()) => {
                Err(Error::InvalidParameter(format!("weight rate must be finite and ≥ 0, got {r}")))
            }
            _ => Ok(()),
        }
    }

    fn log_at(self, t: f64, s: f64) -> f64 {
        match self {
            Weight::Gap(d) => d * (t - s),
            Weight::Absolute(a) => a * t,
            Weight::None => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralReport {
    /// `exp(log_value)`; infinite when the value exceeds `f64` range.
    pub value: f64,
    pub log_value: f64,
    pub truncation_t: f64,
    pub tail_bound: f64,
    pub converged: bool,
    pub evaluations: usize,
}

impl IntegralReport {
    fn from_log(log_value: f64, log_tail: f64, truncation_t: f64, converged: bool, evaluations: usize) -> Self {
        Self { value: log_value.exp(), log_value, truncation_t, tail_bound: log_tail.exp(), converged, evaluations }
    }
}

fn max_panel(sys: &SkewEvolutionSystem, quad: &QuadratureConfig) -> Option<f64> {
    match (sys.max_panel(), quad.max_panel) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

fn improper(
    sys: &SkewEvolutionSystem,
    s: f64,
    quad: &QuadratureConfig,
    lf: impl FnMut(f64) -> Result<f64>,
) -> Result<IntegralReport> {
    let kinks = |lo: f64, hi: f64| sys.breakpoints(lo, hi);
    let r = log_integrate_improper(lf, s, &kinks, max_panel(sys, quad), quad)?;
    Ok(IntegralReport::from_log(r.log_value, r.log_tail_bound, r.truncation_t, r.converged, r.evaluations))
}

/// `∫_s^∞ w(t) ‖Φ(t,s,x)v‖ / ‖v‖ dt`.
pub fn gain_integral(
    sys: &SkewEvolutionSystem,
    weight: Weight,
    s: f64,
    x: BasePoint,
    v: &StateVector,
    quad: &QuadratureConfig,
) -> Result<IntegralReport> {
    weight.validate()?;
    ensure_order(s, s)?;
    improper(sys, s, quad, |t| Ok(weight.log_at(t, s) + sys.log_gain(t, s, x, v)?))
}

/// Nondecreasing `F: [0,∞) → [0,∞)` with `F(0) = 0` and `F(r) > 0` for `r > 0`,
/// represented through `log F(e^y)`.
#[derive(Clone)]
pub enum RolewiczFunction {
    /// `F(r) = r^p`, `p ≥ 1`.
    Power(f64),
    /// `F(r) = min(r, 1) · r`.
    Saturating,
    Custom {
        name: String,
        log_map: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl std::fmt::Debug for RolewiczFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

impl Serialize for RolewiczFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl RolewiczFunction {
    /// `log_map(y) = log F(e^y)`.
    pub fn custom(name: impl Into<String>, log_map: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom { name: name.into(), log_map: Arc::new(log_map) }
    }

    pub fn name(&self) -> String {
        match self {
            RolewiczFunction::Power(p) => format!("r^{p}"),
            RolewiczFunction::Saturating => "min(r,1)*r".into(),
            RolewiczFunction::Custom { name, .. } => name.clone(),
        }
    }

    pub fn parse(tag: &str) -> Option<Self> {
        match tag {
            "r" => Some(Self::Power(1.0)),
            "saturating" | "min(r,1)*r" => Some(Self::Saturating),
            _ => tag.strip_prefix("r^").and_then(|p| p.parse().ok()).map(Self::Power),
        }
    }

    /// `log F(e^{log_r})`.
    pub fn log_eval(&self, log_r: f64) -> f64 {
        match self {
            RolewiczFunction::Power(p) => p * log_r,
            RolewiczFunction::Saturating => log_r + log_r.min(0.0),
            RolewiczFunction::Custom { log_map, .. } => log_map(log_r),
        }
    }

    /// Checks the defining properties on a log-spaced sample of `r`.
    pub fn validate(&self) -> Result<()> {
        if let RolewiczFunction::Power(p) = self {
            if !(*p >= 1.0 && p.is_finite()) {
                return Err(Error::InvalidParameter(format!("power F(r) = r^p needs p ≥ 1, got {p}")));
            }
        }
        if self.log_eval(f64::NEG_INFINITY) != f64::NEG_INFINITY {
            return Err(Error::InvalidParameter("F(0) = 0 required".into()));
        }
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=400 {
            let y = -20.0 + 0.1 * i as f64;
            let v = self.log_eval(y);
            if v.is_nan() || v == f64::NEG_INFINITY {
                return Err(Error::InvalidParameter(format!("F(r) > 0 required for r > 0 (fails at r = e^{y})")));
            }
            if v < prev {
                return Err(Error::InvalidParameter(format!("F must be nondecreasing (fails at r = e^{y})")));
            }
            prev = v;
        }
        Ok(())
    }
}

/// `∫_s^∞ F(e^{d(t-s)} ‖Φ(t,s,x)v‖/‖v‖) dt / F(1)`.
pub fn rolewicz_integral(
    sys: &SkewEvolutionSystem,
    f: &RolewiczFunction,
    d: f64,
    s: f64,
    x: BasePoint,
    v: &StateVector,
    quad: &QuadratureConfig,
) -> Result<IntegralReport> {
    let norm = f.log_eval(0.0);
    improper(sys, s, quad, |t| Ok(f.log_eval(d * (t - s) + sys.log_gain(t, s, x, v)?) - norm))
}

/// Supremum over the `x`/`v` samples at one `s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub s: f64,
    pub value: f64,
    pub log_value: f64,
    /// All samples at this `s` converged.
    pub converged: bool,
    pub truncation_t: f64,
    pub tail_bound: f64,
    pub x: BasePoint,
    pub v_index: usize,
    pub evaluations: usize,
}

/// Integral profile over sampled `s` with per-point convergence flags.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileCheck {
    pub functional: String,
    pub points: Vec<ProfilePoint>,
    /// First `s` at which some integral failed to converge.
    pub refutation: Option<ProfilePoint>,
    /// Converged everywhere, and the upper half of the `s` range adds nothing
    /// beyond the lower half's supremum (relative slack `1e-6`).
    pub bounded: bool,
}

impl ProfileCheck {
    fn new(functional: String, points: Vec<ProfilePoint>) -> Self {
        let refutation = points.iter().find(|p| !p.converged).cloned();
        let bounded = refutation.is_none() && profile_bounded(points.iter().map(|p| (p.s, p.log_value)));
        Self { functional, points, refutation, bounded }
    }

    pub fn converged(&self) -> bool {
        self.refutation.is_none()
    }

    pub fn log_sup(&self) -> f64 {
        self.points.iter().map(|p| p.log_value).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn at(&self, s: f64) -> Option<&ProfilePoint> {
        self.points.iter().find(|p| p.s == s)
    }
}

/// Sup over the upper half of the abscissae ≤ sup over the lower half, in log space.
fn profile_bounded(pts: impl Iterator<Item = (f64, f64)>) -> bool {
    let mut pts: Vec<(f64, f64)> = pts.collect();
    if pts.len() < 2 {
        return pts.iter().all(|p| p.1.is_finite());
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mid = pts.len().div_ceil(2);
    let head = pts[..mid].iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let tail = pts[mid..].iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    tail.is_finite() && tail <= head + 1e-6
}

fn profile(
    s_values: &[f64],
    xs: &[BasePoint],
    vs: &[StateVector],
    integral: impl Fn(f64, BasePoint, &StateVector) -> Result<IntegralReport> + Sync,
) -> Result<Vec<ProfilePoint>> {
    if xs.is_empty() || vs.is_empty() {
        return Err(Error::InvalidParameter("integral profile needs x and v samples".into()));
    }
    s_values
        .par_iter()
        .map(|&s| {
            let mut best: Option<ProfilePoint> = None;
            let mut all = true;
            let mut evals = 0;
            for &x in xs {
                for (k, v) in vs.iter().enumerate() {
                    let r = integral(s, x, v)?;
                    all &= r.converged;
                    evals += r.evaluations;
                    if best.as_ref().is_none_or(|b| r.log_value > b.log_value) {
                        best = Some(ProfilePoint {
                            s,
                            value: r.value,
                            log_value: r.log_value,
                            converged: r.converged,
                            truncation_t: r.truncation_t,
                            tail_bound: r.tail_bound,
                            x,
                            v_index: k,
                            evaluations: 0,
                        });
                    }
                }
            }
            let mut p = best.expect("nonempty samples");
            p.converged = all;
            p.evaluations = evals;
            Ok(p)
        })
        .collect()
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} > 0 required, got {value}")))
    }
}

/// `D̂(s) = sup ∫_s^∞ e^{d(t-s)} ‖Φ(t,s,x)v‖/‖v‖ dt` over the samples.
pub fn datko_check(
    sys: &SkewEvolutionSystem,
    d: f64,
    s_values: &[f64],
    xs: &[BasePoint],
    vs: &[StateVector],
    quad: &QuadratureConfig,
) -> Result<ProfileCheck> {
    positive("gap weight d", d)?;
    let pts = profile(s_values, xs, vs, |s, x, v| gain_integral(sys, Weight::Gap(d), s, x, v, quad))?;
    Ok(ProfileCheck::new(format!("datko(d={d})"), pts))
}

/// Unweighted profile `∫_s^∞ ‖Φ(t,s,x)v‖/‖v‖ dt`.
pub fn integral_stability_check(
    sys: &SkewEvolutionSystem,
    s_values: &[f64],
    xs: &[BasePoint],
    vs: &[StateVector],
    quad: &QuadratureConfig,
) -> Result<ProfileCheck> {
    let pts = profile(s_values, xs, vs, |s, x, v| gain_integral(sys, Weight::None, s, x, v, quad))?;
    Ok(ProfileCheck::new("integral-stability".into(), pts))
}

pub fn rolewicz_check(
    sys: &SkewEvolutionSystem,
    f: &RolewiczFunction,
    d: f64,
    s_values: &[f64],
    xs: &[BasePoint],
    vs: &[StateVector],
    quad: &QuadratureConfig,
) -> Result<ProfileCheck> {
    positive("gap weight d", d)?;
    f.validate()?;
    let pts = profile(s_values, xs, vs, |s, x, v| rolewicz_integral(sys, f, d, s, x, v, quad))?;
    Ok(ProfileCheck::new(format!("rolewicz(F={}, d={d})", f.name()), pts))
}

#[derive(Debug, Clone, Serialize)]
pub struct BvDatkoCheck {
    pub a: f64,
    pub b: f64,
    /// `sup_s I(s) e^{-bs}` in log space.
    pub log_n_hat: f64,
    pub n_hat: f64,
    pub log_n_cap: f64,
    pub pass: bool,
    pub points: Vec<ProfilePoint>,
    /// Non-converged point, or the point where `I(s) e^{-bs}` exceeds the cap.
    pub refutation: Option<ProfilePoint>,
}

/// `∫_s^∞ e^{at} ‖Φ(t,s,x)v‖ dt ≤ N e^{bs} ‖v‖` with `N ≤ e^{log_n_cap}`.
#[allow(clippy::too_many_arguments)]
pub fn bv_datko_check(
    sys: &SkewEvolutionSystem,
    a: f64,
    b: f64,
    s_values: &[f64],
    xs: &[BasePoint],
    vs: &[StateVector],
    log_n_cap: f64,
    quad: &QuadratureConfig,
) -> Result<BvDatkoCheck> {
    positive("a", a)?;
    if !(b >= a) {
        return Err(Error::InvalidParameter(format!("b ≥ a required, got a = {a}, b = {b}")));
    }
    let points = profile(s_values, xs, vs, |s, x, v| gain_integral(sys, Weight::Absolute(a), s, x, v, quad))?;
    let scaled = |p: &ProfilePoint| p.log_value - b * p.s;
    let log_n_hat = points.iter().map(scaled).fold(f64::NEG_INFINITY, f64::max);
    let refutation =
        points.iter().find(|p| !p.converged).or_else(|| points.iter().find(|p| scaled(p) > log_n_cap)).cloned();
    Ok(BvDatkoCheck {
        a,
        b,
        log_n_hat,
        n_hat: log_n_hat.exp(),
        log_n_cap,
        pass: refutation.is_none(),
        points,
        refutation,
    })
}

/// `∫_s^t e^{b(t-τ)} ‖Φ(t,τ,φ(τ,s,x))* v*‖ / ‖v*‖ dτ`.
pub fn barbashin_functional(
    sys: &SkewEvolutionSystem,
    b: f64,
    t: f64,
    s: f64,
    x: BasePoint,
    vstar: &StateVector,
    quad: &QuadratureConfig,
) -> Result<IntegralReport> {
    positive("b", b)?;
    ensure_order(t, s)?;
    quad.validate()?;
    let cuts = sys.breakpoints(s, t);
    let q = log_integrate(
        |tau| Ok(b * (t - tau) + sys.adjoint_log_gain(t, tau, s, x, vstar)?),
        s,
        t,
        &cuts,
        max_panel(sys, quad),
        quad,
    )?;
    let err = q.log_error.exp();
    Ok(IntegralReport {
        value: q.log_value.exp(),
        log_value: q.log_value,
        truncation_t: t,
        tail_bound: err,
        converged: q.converged,
        evaluations: q.evaluations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarbashinPoint {
    pub t: f64,
    pub value: f64,
    pub log_value: f64,
    /// Argument `s` attaining the supremum.
    pub s: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BarbashinCheck {
    pub b: f64,
    pub profile: Vec<BarbashinPoint>,
    /// `B̂` levels off: its supremum over `t > T/2` exceeds the one over
    /// `t ≤ T/2` by at most the relative slack `plateau_tol`.
    pub bounded: bool,
    pub plateau_tol: f64,
    /// Strongest class found by direct classification when `bounded`.
    pub confirmed_class: Option<StabilityClass>,
    /// `bounded` implies direct classification reached ES or stronger.
    pub consistent: bool,
}

/// Relative slack in the plateau test of `B̂`.
pub const BARBASHIN_PLATEAU_TOL: f64 = 1e-3;

pub fn barbashin_check(
    sys: &SkewEvolutionSystem,
    b: f64,
    grid: &SampleGrid,
    quad: &QuadratureConfig,
    fit: &FitConfig,
) -> Result<BarbashinCheck> {
    positive("b", b)?;
    let pairs = grid.pairs();
    let vals: Vec<(f64, f64, f64, bool)> = pairs
        .par_iter()
        .map(|&(t, s)| {
            let mut best = (f64::NEG_INFINITY, true);
            for &x in grid.x_samples() {
                for v in grid.v_samples() {
                    let r = barbashin_functional(sys, b, t, s, x, v, quad)?;
                    best = (best.0.max(r.log_value), best.1 && r.converged);
                }
            }
            Ok((t, s, best.0, best.1))
        })
        .collect::<Result<_>>()?;
    let mut profile: Vec<BarbashinPoint> = Vec::new();
    for (t, s, lv, ok) in vals {
        match profile.iter_mut().find(|p| p.t == t) {
            Some(p) => {
                p.converged &= ok;
                if lv > p.log_value {
                    p.log_value = lv;
                    p.value = lv.exp();
                    p.s = s;
                }
            }
            None => profile.push(BarbashinPoint { t, value: lv.exp(), log_value: lv, s, converged: ok }),
        }
    }
    profile.sort_by(|p, q| p.t.total_cmp(&q.t));
    let horizon = profile.last().map_or(0.0, |p| p.t);
    let head = profile.iter().filter(|p| p.t <= horizon / 2.0).map(|p| p.log_value).fold(f64::NEG_INFINITY, f64::max);
    let tail = profile.iter().filter(|p| p.t > horizon / 2.0).map(|p| p.log_value).fold(f64::NEG_INFINITY, f64::max);
    let bounded = profile.iter().all(|p| p.converged && p.log_value < f64::INFINITY)
        && (tail == f64::NEG_INFINITY || tail <= log_add(head, head + BARBASHIN_PLATEAU_TOL.ln()));
    let confirmed_class = if bounded { stability::classify(sys, grid, fit)?.strongest_class } else { None };
    let consistent = !bounded || confirmed_class.is_some_and(|c| c <= StabilityClass::Es);
    Ok(BarbashinCheck { b, profile, bounded, plateau_tol: BARBASHIN_PLATEAU_TOL, confirmed_class, consistent })
}

#[derive(Debug, Clone, Serialize)]
pub struct PropositionReport {
    pub applicable: bool,
    pub reason: Option<String>,
    pub omega: Option<f64>,
    pub log_m: Option<f64>,
    pub c_hat: Option<f64>,
    /// `(s, log N(s))` of the constructed stability profile.
    pub profile: Vec<(f64, f64)>,
    pub check: Option<CheckOutcome>,
}

impl PropositionReport {
    fn not_applicable(reason: impl Into<String>) -> Self {
        Self {
            applicable: false,
            reason: Some(reason.into()),
            omega: None,
            log_m: None,
            c_hat: None,
            profile: Vec::new(),
            check: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.check.as_ref().is_some_and(CheckOutcome::passed)
    }
}

/// From a finite integral-stability profile `D̂` and bounded exponential growth
/// `‖Φ(t,s,x)‖ ≤ M e^{ω(t-s)}`, builds `N(s) = M [D̂(s)/ĉ + e^{ωs}]` with
/// `ĉ = ∫_0^1 e^{-ωr} dr` and checks `‖Φ(t,s,x)‖ ≤ N(s)` on the grid.
pub fn proposition_crosscheck(
    sys: &SkewEvolutionSystem,
    grid: &SampleGrid,
    quad: &QuadratureConfig,
    fit: &FitConfig,
) -> Result<PropositionReport> {
    let table = GainTable::build(sys, grid)?;
    let growth = stability::fit_growth(&table, fit);
    let (log_m_profile, omega) = match growth.certificate {
        Some(Certificate::Growth { log_m, omega }) => (log_m, omega),
        _ => return Ok(PropositionReport::not_applicable("no bounded exponential growth certificate on the grid")),
    };
    let s_values = table.s_values();
    let m_pts = s_values.iter().map(|&s| (s, log_m_profile.eval(s)));
    if !profile_bounded(m_pts) {
        return Ok(PropositionReport::not_applicable("growth constant M(s) is unbounded in s"));
    }
    let log_m = s_values.iter().map(|&s| log_m_profile.eval(s)).fold(0.0, f64::max);
    let d = integral_stability_check(sys, &s_values, grid.x_samples(), grid.v_samples(), quad)?;
    if let Some(p) = &d.refutation {
        return Ok(PropositionReport {
            omega: Some(omega),
            log_m: Some(log_m),
            ..PropositionReport::not_applicable(format!("integral of the gain does not converge at s = {}", p.s))
        });
    }
    let c_hat = log_integrate(|r| Ok(-omega * r), 0.0, 1.0, &[], None, quad)?.log_value;
    let profile: Vec<(f64, f64)> =
        d.points.iter().map(|p| (p.s, log_m + log_add(p.log_value - c_hat, omega * p.s))).collect();
    let cert = Certificate::Stable { log_n: Profile::Table(profile.clone()) };
    let check = stability::check_on_table(&table, &cert, fit.check_tol)?;
    Ok(PropositionReport {
        applicable: true,
        reason: None,
        omega: Some(omega),
        log_m: Some(log_m),
        c_hat: Some(c_hat.exp()),
        profile,
        check: Some(check),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::semiflow::{Cocycle, Semiflow};
    use nalgebra::DMatrix;

    fn one() -> StateVector {
        StateVector::scalar(1.0)
    }

    fn pd(l: f64) -> SkewEvolutionSystem {
        gallery::pure_decay_system(l).unwrap().system
    }

    #[test]
    fn gain_integral_examples() {
        let q = QuadratureConfig::default();
        let r = gain_integral(&pd(2.0), Weight::Gap(1.0), 0.0, 0.0, &one(), &q).unwrap();
        assert!(r.converged && (r.value - 1.0).abs() < 1e-8);
        assert!(r.tail_bound <= (q.rel_tol * r.value).max(q.abs_tol));
        let r = gain_integral(&pd(2.0), Weight::None, 7.3, 0.0, &one(), &q).unwrap();
        assert!((r.value - 0.5).abs() < 1e-8);
        let r = gain_integral(&pd(2.0), Weight::Absolute(1.0), 1.0, 0.0, &one(), &q).unwrap();
        assert!((r.value - std::f64::consts::E).abs() < 1e-7);
        assert!(gain_integral(&pd(2.0), Weight::Gap(-1.0), 0.0, 0.0, &one(), &q).is_err());
    }

    #[test]
    fn datko_examples() {
        let q = QuadratureConfig::default();
        let ss = [0.0, 1.0, 5.0, 20.0];
        let c = datko_check(&pd(2.0), 1.0, &ss, &[0.0], &[one()], &q).unwrap();
        assert!(c.bounded);
        assert!(c.points.iter().all(|p| (p.value - 1.0).abs() < 1e-8));

        let spike = gallery::spike_system().system;
        let c = datko_check(&spike, 0.5, &[0.0, 1.0, 2.0, 3.0, 4.0, 6.0], &[0.0], &[one()], &q).unwrap();
        assert!(c.converged(), "{:?}", c.refutation);
        assert!(!c.bounded);

        let growth = gallery::growth_system().system;
        let c = datko_check(&growth, 0.5, &[0.0], &[0.0], &[one()], &q).unwrap();
        assert_eq!(c.refutation.as_ref().unwrap().s, 0.0);
        assert!(datko_check(&growth, 0.0, &[0.0], &[0.0], &[one()], &q).is_err());
    }

    #[test]
    fn rolewicz_examples() {
        let q = QuadratureConfig::default();
        let f2 = RolewiczFunction::Power(2.0);
        let r = rolewicz_integral(&pd(2.0), &f2, 1.0, 0.0, 0.0, &one(), &q).unwrap();
        assert!((r.value - 0.5).abs() < 1e-8);
        let r = rolewicz_integral(&pd(2.0), &f2, 2.5, 0.0, 0.0, &one(), &q).unwrap();
        assert!(!r.converged);

        let ss = [0.0, 2.0];
        let a = rolewicz_check(&pd(2.0), &RolewiczFunction::Power(1.0), 1.0, &ss, &[0.0], &[one()], &q).unwrap();
        let b = datko_check(&pd(2.0), 1.0, &ss, &[0.0], &[one()], &q).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!((p.value - q.value).abs() <= 1e-10);
        }
        assert!(RolewiczFunction::Power(0.5).validate().is_err());
        assert!(RolewiczFunction::custom("bad", |y: f64| -y).validate().is_err());
        assert!(RolewiczFunction::Saturating.validate().is_ok());
        assert_eq!(RolewiczFunction::parse("r^2").unwrap().name(), "r^2");
    }

    #[test]
    fn bv_datko_examples() {
        let q = QuadratureConfig::default();
        let c = bv_datko_check(&pd(2.0), 1.0, 1.0, &[0.0, 1.0, 3.0], &[0.0], &[one()], 50.0, &q).unwrap();
        assert!(c.pass && (c.n_hat - 1.0).abs() < 1e-6);

        // the true BV decay rate of exp-sin is 1: a = 1/2 converges, a = 1 does not
        let es = gallery::exp_sin_system().system;
        let ss: Vec<f64> = (0..=10).map(|i| 2.0 * i as f64).collect();
        let c = bv_datko_check(&es, 0.5, 4.0, &ss, &[0.0], &[one()], 50.0, &q).unwrap();
        assert!(c.pass, "{:?}", c.refutation);
        let c = bv_datko_check(&es, 1.0, 4.0, &[0.0], &[0.0], &[one()], 50.0, &q).unwrap();
        assert!(!c.pass);

        let spike = gallery::spike_system().system;
        let c = bv_datko_check(&spike, 0.5, 3.0, &[0.0, 6.0], &[0.0], &[one()], 50.0, &q).unwrap();
        assert!(!c.pass);
        assert_eq!(c.refutation.unwrap().s, 6.0);
        assert!(bv_datko_check(&spike, 1.0, 0.5, &[0.0], &[0.0], &[one()], 50.0, &q).is_err());
    }

    #[test]
    fn barbashin_examples() {
        let q = QuadratureConfig::default();
        let r = barbashin_functional(&pd(2.0), 1.0, 5.0, 2.0, 0.0, &one(), &q).unwrap();
        assert!((r.value - (1.0 - (-3f64).exp())).abs() < 1e-8);
        let r = barbashin_functional(&pd(2.0), 1.0, 2.0, 2.0, 0.0, &one(), &q).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(barbashin_functional(&pd(2.0), 1.0, 1.0, 2.0, 0.0, &one(), &q).is_err());

        let diag = Cocycle::matrix(
            2,
            Arc::new(|t: f64, s: f64, _| {
                DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![(s - t).exp(), (3.0 * (s - t)).exp()]))
            }),
        )
        .unwrap();
        let sys = SkewEvolutionSystem::new("diag", Semiflow::Translation, diag);
        let r = barbashin_functional(&sys, 1.0, 3.0, 1.0, 0.0, &StateVector::new(vec![1.0, 0.0]), &q).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn barbashin_check_examples() {
        let q = QuadratureConfig::default();
        let fit = FitConfig::default();
        let grid = SampleGrid::scalar(SampleGrid::log_times(100.0, 30, 0.01)).unwrap();
        let c = barbashin_check(&pd(2.0), 1.0, &grid, &q, &fit).unwrap();
        assert!(c.bounded && c.consistent);
        assert!(c.profile.iter().all(|p| p.value <= 1.0 + 1e-9));
        assert!(c.confirmed_class.unwrap() <= StabilityClass::Es);

        let growth = gallery::growth_system().system;
        let c = barbashin_check(&growth, 1.0, &grid, &q, &fit).unwrap();
        assert!(!c.bounded && c.confirmed_class.is_none());
    }

    #[test]
    fn proposition_examples() {
        let q = QuadratureConfig::default();
        let fit = FitConfig::default();
        let grid = SampleGrid::uniform(40.0, 40).unwrap();
        let r = proposition_crosscheck(&pd(2.0), &grid, &q, &fit).unwrap();
        assert!(r.applicable && r.passed());
        assert_eq!(r.omega, Some(0.0));
        assert!((r.c_hat.unwrap() - 1.0).abs() < 1e-12);
        assert!(r.profile.iter().all(|(_, l)| (l.exp() - 1.5).abs() < 1e-8));

        let r = proposition_crosscheck(&gallery::subexp_system().system, &grid, &q, &fit).unwrap();
        assert!(!r.applicable);
        assert!(r.reason.unwrap().contains("does not converge"));

        let spike = gallery::spike_system();
        let params = crate::grid::GridParams { horizon: 20.0, t_points: 40, ..Default::default() };
        let grid = SampleGrid::for_gallery(&spike, &params, 0).unwrap();
        let r = proposition_crosscheck(&spike.system, &grid, &q, &fit).unwrap();
        assert!(!r.applicable);
        assert!(r.reason.unwrap().contains("unbounded"));
    }
}
