//! Certificate checks, certificate fitting and classification into the
//! stability chain UES ⟹ BVES ⟹ ES ⟹ S ⟹ EG.
//!
//! Every conclusion is relative to the grid it was computed on. A class is
//! certified when a fitted (or implied) certificate passes on the whole grid;
//! it is refuted only by a concrete [`Witness`]; anything else is inconclusive.
//!
//! Fitted constants must be *horizon-stable*: the constant needed on the later
//! half of the grid may not exceed the one needed on the earlier half. This is
//! what separates a genuine decay rate from one that a finite horizon merely
//! tolerates. Exponential classes additionally require that the decay rate of
//! long columns does not collapse from one decade to the next.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::certificate::{Certificate, Profile, StabilityClass};
use crate::error::Result;
use crate::grid::{GainPoint, GainTable, SampleGrid};
use crate::semiflow::{SkewEvolutionSystem, StateVector};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitConfig {
    pub log_n_cap: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub beta_cap: f64,
    pub omega_max: f64,
    /// Slack allowed between head and tail suprema.
    pub fit_tol: f64,
    /// Absolute tolerance of pointwise certificate checks (log space).
    pub check_tol: f64,
    pub bisection_steps: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            log_n_cap: 50.0,
            alpha_min: 1e-3,
            alpha_max: 50.0,
            beta_cap: 50.0,
            omega_max: 50.0,
            fit_tol: 1e-6,
            check_tol: 1e-9,
            bisection_steps: 64,
        }
    }
}

/// A grid point where a certificate's inequality fails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub t: f64,
    pub s: f64,
    pub x: f64,
    pub v: StateVector,
    pub log_gain: f64,
    pub log_bound: f64,
    /// `log_gain - log_bound`.
    pub margin: f64,
}

impl Witness {
    /// Recomputes the margin from scratch through the system.
    pub fn reevaluate(&self, sys: &SkewEvolutionSystem, cert: &Certificate) -> Result<f64> {
        Ok(sys.log_gain(self.t, self.s, self.x, &self.v)? - cert.log_bound(self.t, self.s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum CheckOutcome {
    Pass { worst_margin: f64, points: usize },
    Fail { witness: Witness },
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, CheckOutcome::Pass { .. })
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            CheckOutcome::Fail { witness } => Some(witness),
            CheckOutcome::Pass { .. } => None,
        }
    }
}

fn violates(margin: f64, gain: f64, bound: f64, tol: f64) -> bool {
    margin > tol + 4.0 * f64::EPSILON * (gain.abs() + bound.abs())
}

/// Pointwise check of `cert` on a precomputed gain table.
pub fn check_on_table(table: &GainTable, cert: &Certificate, tol: f64) -> Result<CheckOutcome> {
    cert.validate(&table.s_values())?;
    let mut worst = f64::NEG_INFINITY;
    let mut witness: Option<(&GainPoint, f64, f64)> = None;
    for p in table.points() {
        let bound = cert.log_bound(p.t, p.s);
        let margin = p.gain - bound;
        worst = worst.max(margin);
        if violates(margin, p.gain, bound, tol) {
            let better = match witness {
                None => true,
                Some((q, _, m)) => margin > m || (margin == m && (p.t, p.s) < (q.t, q.s)),
            };
            if better {
                witness = Some((p, bound, margin));
            }
        }
    }
    Ok(match witness {
        None => CheckOutcome::Pass { worst_margin: worst, points: table.points().len() },
        Some((p, bound, margin)) => CheckOutcome::Fail {
            witness: Witness {
                t: p.t,
                s: p.s,
                x: p.x,
                v: table.v_sample(p.v_index).clone(),
                log_gain: p.gain,
                log_bound: bound,
                margin,
            },
        },
    })
}

pub fn check_certificate(
    sys: &SkewEvolutionSystem,
    cert: &Certificate,
    grid: &SampleGrid,
    tol: f64,
) -> Result<CheckOutcome> {
    cert.validate(&grid.s_values())?;
    check_on_table(&GainTable::build(sys, grid)?, cert, tol)
}

const DEFAULT_CHECK_TOL: f64 = 1e-9;

/// `log gain ≤ log N - α(t - s)`.
pub fn check_ues(sys: &SkewEvolutionSystem, log_n: f64, alpha: f64, grid: &SampleGrid) -> Result<CheckOutcome> {
    check_certificate(sys, &Certificate::Ues { log_n, alpha }, grid, DEFAULT_CHECK_TOL)
}

/// `log gain ≤ log N - αt + βs`.
pub fn check_bves(
    sys: &SkewEvolutionSystem,
    log_n: f64,
    alpha: f64,
    beta: f64,
    grid: &SampleGrid,
) -> Result<CheckOutcome> {
    check_certificate(sys, &Certificate::Bves { log_n, alpha, beta }, grid, DEFAULT_CHECK_TOL)
}

/// `log gain ≤ log N(s) - αt`.
pub fn check_es(sys: &SkewEvolutionSystem, log_n: Profile, alpha: f64, grid: &SampleGrid) -> Result<CheckOutcome> {
    check_certificate(sys, &Certificate::Es { log_n, alpha }, grid, DEFAULT_CHECK_TOL)
}

/// `log gain ≤ log N(s)`.
pub fn check_stable(sys: &SkewEvolutionSystem, log_n: Profile, grid: &SampleGrid) -> Result<CheckOutcome> {
    check_certificate(sys, &Certificate::Stable { log_n }, grid, DEFAULT_CHECK_TOL)
}

/// `log gain ≤ log M(s) + ω(t - s)`.
pub fn check_eg(sys: &SkewEvolutionSystem, log_m: Profile, omega: f64, grid: &SampleGrid) -> Result<CheckOutcome> {
    check_certificate(sys, &Certificate::Growth { log_m, omega }, grid, DEFAULT_CHECK_TOL)
}

fn sup_by<'a>(pts: impl IntoIterator<Item = &'a GainPoint>, f: impl Fn(&GainPoint) -> f64) -> f64 {
    pts.into_iter().map(f).fold(f64::NEG_INFINITY, f64::max)
}

/// Head/tail comparison over the whole table (split at the median time).
fn stable_whole(table: &GainTable, tol: f64, f: impl Fn(&GainPoint) -> f64) -> bool {
    let cut = table.split_time();
    let head = sup_by(table.points().iter().filter(|p| p.t <= cut), &f);
    let tail = sup_by(table.points().iter().filter(|p| p.t > cut), &f);
    tail <= head.max(0.0) + tol
}

fn column_head(col: &[GainPoint]) -> &[GainPoint] {
    &col[..col.len().div_ceil(2)]
}

/// Head/tail comparison inside every column of at least four points.
fn stable_columns(table: &GainTable, tol: f64, f: impl Fn(&GainPoint) -> f64) -> bool {
    table.columns().all(|(_, col)| {
        if col.len() < 4 {
            return true;
        }
        let h = col.len().div_ceil(2);
        let head = sup_by(&col[..h], &f);
        let tail = sup_by(&col[h..], &f);
        tail <= head.max(0.0) + tol
    })
}

/// Largest value in `[lo, hi]` (to bisection resolution) for which `ok` holds,
/// assuming `ok(lo)` and monotone failure above the boundary.
fn bisect_max(lo: f64, hi: f64, steps: usize, ok: impl Fn(f64) -> bool) -> f64 {
    if ok(hi) {
        return hi;
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Smallest value in `[lo, hi]` for which `ok` holds, assuming `ok(hi)`.
fn bisect_min(lo: f64, hi: f64, steps: usize, ok: impl Fn(f64) -> bool) -> f64 {
    if ok(lo) {
        return lo;
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Early and late decay rates of the upper envelope of a long column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayTrend {
    pub s: f64,
    /// Decay rate over `r ∈ [R/100, R/10]`.
    pub early_rate: f64,
    /// Decay rate over `r ∈ [R/10, R]`.
    pub late_rate: f64,
}

impl DecayTrend {
    pub fn decelerating(&self, alpha_min: f64) -> bool {
        self.early_rate > alpha_min && self.late_rate < 0.5 * self.early_rate
    }
}

fn column_trend(s: f64, col: &[GainPoint]) -> Option<DecayTrend> {
    let last = col.last()?;
    let span = last.t - s;
    let mut suffix = vec![f64::NEG_INFINITY; col.len() + 1];
    for i in (0..col.len()).rev() {
        suffix[i] = suffix[i + 1].max(col[i].gain);
    }
    let a = col.iter().position(|p| p.t - s >= span / 100.0)?;
    let b = col.iter().position(|p| p.t - s >= span / 10.0)?;
    let c = col.len() - 1;
    let (ra, rb, rc) = (col[a].t - s, col[b].t - s, col[c].t - s);
    if !(ra < rb && rb < rc) {
        return None;
    }
    Some(DecayTrend {
        s,
        early_rate: (suffix[a] - suffix[b]) / (rb - ra),
        late_rate: (suffix[b] - suffix[c]) / (rc - rb),
    })
}

/// First long column (span at least half the horizon) whose decay decelerates.
pub fn decelerating_column(table: &GainTable, alpha_min: f64) -> Option<DecayTrend> {
    let horizon = table.horizon();
    table
        .columns()
        .filter(|(s, col)| col.len() >= 4 && col.last().is_some_and(|p| p.t - s >= 0.5 * horizon))
        .filter_map(|(s, col)| column_trend(s, col))
        .find(|tr| tr.decelerating(alpha_min))
}

/// Least-squares slope of the binned upper envelope of log gain against
/// `t - s` over the last decade of gaps.
pub fn envelope_slope(table: &GainTable) -> Option<f64> {
    let r_max = table.points().iter().map(|p| p.t - p.s).fold(0.0, f64::max);
    if r_max <= 0.0 {
        return None;
    }
    const BINS: usize = 16;
    let lo = r_max / 10.0;
    let mut best: Vec<Option<(f64, f64)>> = vec![None; BINS];
    for p in table.points() {
        let r = p.t - p.s;
        if r < lo {
            continue;
        }
        let k = (((r / lo).ln() / 10f64.ln()) * BINS as f64).floor().min((BINS - 1) as f64) as usize;
        if best[k].is_none_or(|(_, g)| p.gain > g) {
            best[k] = Some((r, p.gain));
        }
    }
    let pts: Vec<(f64, f64)> = best.into_iter().flatten().collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub class: StabilityClass,
    pub certificate: Option<Certificate>,
    pub reason: Option<String>,
    pub envelope_slope: Option<f64>,
    pub decay_trend: Option<DecayTrend>,
}

impl FitReport {
    pub fn feasible(&self) -> bool {
        self.certificate.is_some()
    }

    fn infeasible(class: StabilityClass, reason: impl Into<String>) -> Self {
        Self { class, certificate: None, reason: Some(reason.into()), envelope_slope: None, decay_trend: None }
    }

    fn feasible_with(class: StabilityClass, cert: Certificate) -> Self {
        Self { class, certificate: Some(cert), reason: None, envelope_slope: None, decay_trend: None }
    }
}

fn deceleration_reason(tr: &DecayTrend) -> String {
    format!(
        "decay rate of column s = {} falls from {:.6} to {:.6} per unit time: decay is subexponential",
        tr.s, tr.early_rate, tr.late_rate
    )
}

/// Largest horizon-stable `α` with `log N ≤ cap` for `log gain ≤ log N - α(t-s)`.
pub fn fit_ues(table: &GainTable, cfg: &FitConfig) -> FitReport {
    let trend = decelerating_column(table, cfg.alpha_min);
    let h = |a: f64| sup_by(table.points(), |p| p.gain + a * (p.t - p.s));
    let ok = |a: f64| stable_whole(table, cfg.fit_tol, |p| p.gain + a * (p.t - p.s)) && h(a).max(0.0) <= cfg.log_n_cap;
    let mut report = if let Some(tr) = &trend {
        FitReport::infeasible(StabilityClass::Ues, deceleration_reason(tr))
    } else if !ok(cfg.alpha_min) {
        FitReport::infeasible(
            StabilityClass::Ues,
            format!("no decay rate α ≥ {} is horizon-stable with log N ≤ {}", cfg.alpha_min, cfg.log_n_cap),
        )
    } else {
        let alpha = bisect_max(cfg.alpha_min, cfg.alpha_max, cfg.bisection_steps, ok);
        FitReport::feasible_with(StabilityClass::Ues, Certificate::Ues { log_n: h(alpha).max(0.0), alpha })
    };
    report.envelope_slope = envelope_slope(table);
    report.decay_trend = trend;
    report
}

/// Maximizes `α`, then minimizes `β - α`, for `log gain ≤ log N - αt + βs`.
pub fn fit_bves(table: &GainTable, cfg: &FitConfig) -> FitReport {
    let trend = decelerating_column(table, cfg.alpha_min);
    let h = |a: f64, b: f64| sup_by(table.points(), |p| p.gain + a * p.t - b * p.s);
    let ok = |a: f64, b: f64| {
        stable_whole(table, cfg.fit_tol, |p| p.gain + a * p.t - b * p.s) && h(a, b).max(0.0) <= cfg.log_n_cap
    };
    let mut report = if let Some(tr) = &trend {
        FitReport::infeasible(StabilityClass::Bves, deceleration_reason(tr))
    } else if !ok(cfg.alpha_min, cfg.beta_cap) {
        FitReport::infeasible(
            StabilityClass::Bves,
            format!(
                "no (α ≥ {}, β ≤ {}) is horizon-stable with log N ≤ {}",
                cfg.alpha_min, cfg.beta_cap, cfg.log_n_cap
            ),
        )
    } else {
        let alpha =
            bisect_max(cfg.alpha_min, cfg.alpha_max.min(cfg.beta_cap), cfg.bisection_steps, |a| ok(a, cfg.beta_cap));
        let beta = bisect_min(alpha, cfg.beta_cap, cfg.bisection_steps, |b| ok(alpha, b));
        FitReport::feasible_with(
            StabilityClass::Bves,
            Certificate::Bves { log_n: h(alpha, beta).max(0.0), alpha, beta },
        )
    };
    report.decay_trend = trend;
    report
}

fn column_profile(table: &GainTable, f: impl Fn(&GainPoint) -> f64) -> Profile {
    Profile::Table(table.columns().map(|(s, col)| (s, sup_by(col, &f).max(0.0))).collect())
}

fn column_head_profile(table: &GainTable, f: impl Fn(&GainPoint) -> f64) -> Profile {
    Profile::Table(table.columns().map(|(s, col)| (s, sup_by(column_head(col), &f).max(0.0))).collect())
}

/// Per-`s` profile `log N(s)` with the largest horizon-stable common `α`.
pub fn fit_es(table: &GainTable, cfg: &FitConfig) -> FitReport {
    let trend = decelerating_column(table, cfg.alpha_min);
    let ok = |a: f64| stable_columns(table, cfg.fit_tol, |p| p.gain + a * p.t);
    let mut report = if let Some(tr) = &trend {
        FitReport::infeasible(StabilityClass::Es, deceleration_reason(tr))
    } else if !ok(cfg.alpha_min) {
        FitReport::infeasible(
            StabilityClass::Es,
            format!("no rate α ≥ {} keeps every column of N(s) horizon-stable", cfg.alpha_min),
        )
    } else {
        let alpha = bisect_max(cfg.alpha_min, cfg.alpha_max, cfg.bisection_steps, ok);
        FitReport::feasible_with(
            StabilityClass::Es,
            Certificate::Es { log_n: column_profile(table, |p| p.gain + alpha * p.t), alpha },
        )
    };
    report.decay_trend = trend;
    report
}

/// Per-`s` supremum of the gain.
pub fn fit_stable(table: &GainTable, cfg: &FitConfig) -> FitReport {
    if stable_columns(table, cfg.fit_tol, |p| p.gain) {
        FitReport::feasible_with(
            StabilityClass::Stable,
            Certificate::Stable { log_n: column_profile(table, |p| p.gain) },
        )
    } else {
        FitReport::infeasible(StabilityClass::Stable, "per-s supremum of the gain keeps growing with t")
    }
}

/// Smallest horizon-stable growth rate `ω` and the matching `log M(s)`.
pub fn fit_growth(table: &GainTable, cfg: &FitConfig) -> FitReport {
    let ok = |w: f64| stable_columns(table, cfg.fit_tol, |p| p.gain - w * (p.t - p.s));
    if !ok(cfg.omega_max) {
        return FitReport::infeasible(
            StabilityClass::Growth,
            format!("gain outgrows e^(ω(t-s)) for every ω ≤ {}", cfg.omega_max),
        );
    }
    let omega = bisect_min(0.0, cfg.omega_max, cfg.bisection_steps, ok);
    let log_m = column_profile(table, |p| p.gain - omega * (p.t - p.s));
    let mut r = FitReport::feasible_with(StabilityClass::Growth, Certificate::Growth { log_m, omega });
    r.envelope_slope = Some(omega);
    r
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileFits {
    pub es: FitReport,
    pub stable: FitReport,
    pub growth: FitReport,
}

pub fn fit_profiles(table: &GainTable, cfg: &FitConfig) -> ProfileFits {
    ProfileFits { es: fit_es(table, cfg), stable: fit_stable(table, cfg), growth: fit_growth(table, cfg) }
}

pub fn fit_class(table: &GainTable, class: StabilityClass, cfg: &FitConfig) -> FitReport {
    match class {
        StabilityClass::Ues => fit_ues(table, cfg),
        StabilityClass::Bves => fit_bves(table, cfg),
        StabilityClass::Es => fit_es(table, cfg),
        StabilityClass::Stable => fit_stable(table, cfg),
        StabilityClass::Growth => fit_growth(table, cfg),
    }
}

/// Candidate fitted on the early part of the grid only; if the full grid
/// violates it, the violation is a concrete refutation.
fn head_candidate(table: &GainTable, class: StabilityClass, cfg: &FitConfig, probe_alpha: f64) -> Certificate {
    let head = table.head();
    match class {
        StabilityClass::Ues => Certificate::Ues {
            log_n: sup_by(head.points(), |p| p.gain + probe_alpha * (p.t - p.s)).max(0.0),
            alpha: probe_alpha,
        },
        StabilityClass::Bves => {
            let beta = cfg.beta_cap.max(probe_alpha);
            Certificate::Bves {
                log_n: sup_by(head.points(), |p| p.gain + probe_alpha * p.t - beta * p.s).max(0.0),
                alpha: probe_alpha,
                beta,
            }
        }
        StabilityClass::Es => {
            Certificate::Es { log_n: column_head_profile(table, |p| p.gain + probe_alpha * p.t), alpha: probe_alpha }
        }
        StabilityClass::Stable => Certificate::Stable { log_n: column_head_profile(table, |p| p.gain) },
        StabilityClass::Growth => Certificate::Growth {
            log_m: column_head_profile(table, |p| p.gain - cfg.omega_max * (p.t - p.s)),
            omega: cfg.omega_max,
        },
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Refutation {
    pub witness: Witness,
    /// The certificate the witness violates.
    pub candidate: Certificate,
}

/// Looks for a witness against `class` on the table.
pub fn refute(table: &GainTable, class: StabilityClass, cfg: &FitConfig) -> Result<Option<Refutation>> {
    let probe = decelerating_column(table, cfg.alpha_min)
        .filter(|_| matches!(class, StabilityClass::Ues | StabilityClass::Bves | StabilityClass::Es))
        .map_or(cfg.alpha_min, |tr| tr.early_rate);
    let candidate = head_candidate(table, class, cfg, probe);
    Ok(match check_on_table(table, &candidate, cfg.check_tol)? {
        CheckOutcome::Fail { witness } => Some(Refutation { witness, candidate }),
        CheckOutcome::Pass { .. } => None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LatticeVerdict {
    pub strongest_class: Option<StabilityClass>,
    pub certificates: BTreeMap<StabilityClass, Certificate>,
    pub refutations: BTreeMap<StabilityClass, Refutation>,
    pub inconclusive: BTreeMap<StabilityClass, String>,
    pub fits: Vec<FitReport>,
    pub grid_horizon: f64,
    pub grid_points: usize,
}

impl LatticeVerdict {
    /// Decay rate of the certified ES certificate, if any.
    pub fn es_rate(&self) -> Option<f64> {
        match self.certificates.get(&StabilityClass::Es) {
            Some(Certificate::Es { alpha, .. }) => Some(*alpha),
            _ => None,
        }
    }

    pub fn is_at_least(&self, class: StabilityClass) -> bool {
        self.strongest_class.is_some_and(|c| c <= class)
    }
}

pub fn classify_table(table: &GainTable, cfg: &FitConfig) -> Result<LatticeVerdict> {
    let fits: Vec<FitReport> = StabilityClass::CHAIN.iter().map(|c| fit_class(table, *c, cfg)).collect();
    let mut strongest = None;
    for f in &fits {
        if let Some(cert) = &f.certificate {
            if check_on_table(table, cert, cfg.check_tol)?.passed() {
                strongest = Some(f.class);
                break;
            }
        }
    }
    let mut certificates = BTreeMap::new();
    let mut refutations = BTreeMap::new();
    let mut inconclusive = BTreeMap::new();
    let mut carried: Option<Certificate> = None;
    for f in &fits {
        let class = f.class;
        if strongest.is_none_or(|s| class < s) {
            match refute(table, class, cfg)? {
                Some(r) => {
                    refutations.insert(class, r);
                }
                None => {
                    let why = f.reason.clone().unwrap_or_else(|| "fitted certificate did not pass".into());
                    inconclusive.insert(class, format!("no witness on this grid; fit: {why}"));
                }
            }
            continue;
        }
        let own = match &f.certificate {
            Some(c) if check_on_table(table, c, cfg.check_tol)?.passed() => Some(c.clone()),
            _ => None,
        };
        let cert = match own {
            Some(c) => c,
            None => carried.as_ref().and_then(Certificate::weaken).expect("stronger class certified"),
        };
        carried = Some(cert.clone());
        certificates.insert(class, cert);
    }
    Ok(LatticeVerdict {
        strongest_class: strongest,
        certificates,
        refutations,
        inconclusive,
        fits,
        grid_horizon: table.horizon(),
        grid_points: table.points().len(),
    })
}

/// Runs the five fitters strongest-first and attaches witnesses to every
/// refuted stronger class.
pub fn classify(sys: &SkewEvolutionSystem, grid: &SampleGrid, cfg: &FitConfig) -> Result<LatticeVerdict> {
    classify_table(&GainTable::build(sys, grid)?, cfg)
}
