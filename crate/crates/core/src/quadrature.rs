//! Adaptive Gauss–Kronrod quadrature of positive integrands given by their
//! logarithm. Panel sums are carried as `(max, scaled sum)` pairs so that
//! integrands far beyond `f64` range still produce a finite log value.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest integration length for improper integrals.
    pub max_horizon: f64,
    /// Upper bound on panel width, on top of the system's own bound.
    pub max_panel: Option<f64>,
    /// Panel budget per finite segment.
    pub max_panels: usize,
    /// Known decay rate used for tail bounds instead of the fitted one.
    pub tail_rate: Option<f64>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-8, abs_tol: 1e-12, max_horizon: 500.0, max_panel: None, max_panels: 4000, tail_rate: None }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return bad("quadrature tolerances rel_tol, abs_tol must be > 0");
        }
        if !(self.max_horizon > 0.0 && self.max_horizon.is_finite()) {
            return bad("max_horizon must be finite and > 0");
        }
        if self.max_panel.is_some_and(|w| !(w > 0.0)) {
            return bad("max_panel must be > 0");
        }
        if self.tail_rate.is_some_and(|r| !(r > 0.0)) {
            return bad("tail_rate must be > 0");
        }
        if self.max_panels == 0 {
            return bad("max_panels must be positive");
        }
        Ok(())
    }

    fn target(&self, log_value: f64) -> f64 {
        (self.rel_tol.ln() + log_value).max(self.abs_tol.ln())
    }
}

/// `log(e^a + e^b)`.
pub fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

pub fn log_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights at the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Integrand evaluations per panel: 15 nodes and both endpoints.
const GK_EVALS: usize = 17;

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    log_value: f64,
    log_error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.log_error.total_cmp(&other.log_error).then(other.a.total_cmp(&self.a))
    }
}

fn gk15(lf: &mut impl FnMut(f64) -> Result<f64>, a: f64, b: f64) -> Result<Panel> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut vals = [0.0; 15];
    vals[7] = lf(c)?;
    for k in 0..7 {
        vals[k] = lf(c - h * XGK[k])?;
        vals[14 - k] = lf(c + h * XGK[k])?;
    }
    if vals.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::Evaluation(format!("integrand not finite on [{a}, {b}]")));
    }
    let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Ok(Panel { a, b, log_value: m, log_error: m });
    }
    let e: Vec<f64> = vals.iter().map(|v| (v - m).exp()).collect();
    let mut kron = WGK[7] * e[7];
    let mut gauss = WG[3] * e[7];
    for k in 0..7 {
        let pair = e[k] + e[14 - k];
        kron += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    let log_h = h.ln();
    let err = (kron - gauss).abs();
    // rounding floor so that smooth panels are not refined forever
    let floor = 50.0 * f64::EPSILON * kron;
    let mut log_error = m + log_h + err.max(floor).ln();
    // A steep edge layer that falls off before the outermost node is invisible
    // to both rules; an endpoint far above every node marks the panel unresolved.
    let edge = [lf(a)?, lf(b)?].into_iter().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if edge > m + std::f64::consts::LN_2 {
        log_error = log_error.max(log_h + edge);
    }
    Ok(Panel { a, b, log_value: m + log_h + kron.ln(), log_error })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogQuadrature {
    pub log_value: f64,
    pub log_error: f64,
    pub evaluations: usize,
    pub panels: usize,
    pub converged: bool,
}

/// Initial partition of `[a, b]` at `cuts`, with widths at most `max_panel`.
fn partition(a: f64, b: f64, cuts: &[f64], max_panel: Option<f64>) -> Vec<(f64, f64)> {
    let mut knots = vec![a];
    knots.extend(cuts.iter().copied().filter(|c| *c > a && *c < b));
    knots.push(b);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut out = Vec::new();
    for w in knots.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let pieces = match max_panel {
            Some(mp) => ((hi - lo) / mp).ceil().max(1.0) as usize,
            None => 1,
        };
        for i in 0..pieces {
            let x0 = lo + (hi - lo) * i as f64 / pieces as f64;
            let x1 = if i + 1 == pieces { hi } else { lo + (hi - lo) * (i + 1) as f64 / pieces as f64 };
            out.push((x0, x1));
        }
    }
    out
}

/// `log ∫_a^b exp(lf(x)) dx` to relative accuracy `rel_tol`.
pub fn log_integrate(
    mut lf: impl FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    cuts: &[f64],
    max_panel: Option<f64>,
    cfg: &QuadratureConfig,
) -> Result<LogQuadrature> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::InvalidParameter(format!("integration interval [{a}, {b}] is invalid")));
    }
    if a == b {
        return Ok(LogQuadrature {
            log_value: f64::NEG_INFINITY,
            log_error: f64::NEG_INFINITY,
            evaluations: 0,
            panels: 0,
            converged: true,
        });
    }
    let mut heap = BinaryHeap::new();
    let mut finished = Vec::new();
    let mut evaluations = 0;
    for (x0, x1) in partition(a, b, cuts, max_panel) {
        heap.push(gk15(&mut lf, x0, x1)?);
        evaluations += GK_EVALS;
    }
    let exact = |heap: &BinaryHeap<Panel>, done: &[Panel]| {
        let v = RunningLogSum::from(heap.iter().chain(done).map(|p| p.log_value));
        let e = RunningLogSum::from(heap.iter().chain(done).map(|p| p.log_error));
        (v, e)
    };
    let (mut value, mut error) = exact(&heap, &finished);
    let mut steps = 0usize;
    loop {
        steps += 1;
        if steps.is_multiple_of(128) {
            (value, error) = exact(&heap, &finished);
        }
        let panels = heap.len() + finished.len();
        let (v, e) = (value.log(), error.log());
        if e <= cfg.target(v) || heap.is_empty() || panels >= cfg.max_panels {
            // final totals are recomputed exactly so that drift never reaches the report
            let (value, error) = exact(&heap, &finished);
            let (v, e) = (value.log(), error.log());
            return Ok(LogQuadrature {
                log_value: v,
                log_error: e,
                evaluations,
                panels,
                converged: e <= cfg.target(v),
            });
        }
        let p = heap.pop().expect("nonempty heap");
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) || (p.b - p.a) <= 1e-14 * p.a.abs().max(1.0) {
            finished.push(p);
            continue;
        }
        let (l, r) = (gk15(&mut lf, p.a, mid)?, gk15(&mut lf, mid, p.b)?);
        evaluations += 2 * GK_EVALS;
        value.remove(p.log_value);
        error.remove(p.log_error);
        for q in [l, r] {
            value.add(q.log_value);
            error.add(q.log_error);
            heap.push(q);
        }
    }
}

/// Sum of `e^{x_i}` kept as `e^{reference} · scaled`.
#[derive(Debug, Clone, Copy)]
struct RunningLogSum {
    reference: f64,
    scaled: f64,
}

impl RunningLogSum {
    fn from(values: impl Iterator<Item = f64>) -> Self {
        let mut s = Self { reference: f64::NEG_INFINITY, scaled: 0.0 };
        for v in values {
            s.add(v);
        }
        s
    }

    fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.reference {
            self.scaled = self.scaled * (self.reference - x).exp() + 1.0;
            self.reference = x;
        } else {
            self.scaled += (x - self.reference).exp();
        }
    }

    fn remove(&mut self, x: f64) {
        if x != f64::NEG_INFINITY {
            self.scaled = (self.scaled - (x - self.reference).exp()).max(0.0);
        }
    }

    fn log(&self) -> f64 {
        if self.scaled > 0.0 {
            self.reference + self.scaled.ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Result of an improper integral `∫_s^∞`, all magnitudes in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogImproper {
    pub log_value: f64,
    pub log_tail_bound: f64,
    pub truncation_t: f64,
    pub converged: bool,
    pub evaluations: usize,
}

fn half_max(lf: &mut impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64, kinks: &[f64], spacing: f64) -> Result<f64> {
    let n = (((hi - lo) / spacing).ceil() as usize).clamp(32, 100_000);
    let mut m = f64::NEG_INFINITY;
    for i in 0..=n {
        m = m.max(lf(lo + (hi - lo) * i as f64 / n as f64)?);
    }
    for &k in kinks.iter().filter(|k| **k >= lo && **k <= hi) {
        m = m.max(lf(k)?);
    }
    Ok(m)
}

/// `log ∫_s^∞ exp(lf(t)) dt` by doubling segments `[s, s+1], [s+1, s+3], ...`.
///
/// After each segment the integrand's envelope decay rate is estimated from the
/// maxima `M1, M2` over its two halves; with rate `r > 0` the tail beyond the
/// segment is bounded by `exp(M2) / r`. The integral is converged once that
/// bound is within tolerance and, unless `s + max_horizon` has been reached, the
/// last segment's own contribution is too; otherwise integration stops at
/// `s + max_horizon`.
pub fn log_integrate_improper(
    mut lf: impl FnMut(f64) -> Result<f64>,
    s: f64,
    kinks: &dyn Fn(f64, f64) -> Vec<f64>,
    max_panel: Option<f64>,
    cfg: &QuadratureConfig,
) -> Result<LogImproper> {
    cfg.validate()?;
    let end = s + cfg.max_horizon;
    let mut total = f64::NEG_INFINITY;
    let mut evaluations = 0;
    let (mut a, mut len) = (s, 1.0);
    loop {
        let b = (a + len).min(end);
        let cuts = kinks(a, b);
        let seg = log_integrate(&mut lf, a, b, &cuts, max_panel, cfg)?;
        evaluations += seg.evaluations;
        total = log_add(total, seg.log_value);
        let mid = 0.5 * (a + b);
        let spacing = max_panel.map_or(f64::INFINITY, |w| w / 4.0);
        let m1 = half_max(&mut lf, a, mid, &cuts, spacing)?;
        let m2 = half_max(&mut lf, mid, b, &cuts, spacing)?;
        evaluations += 2 * (((mid - a) / spacing).ceil() as usize).clamp(32, 100_000) + cuts.len();
        let rate = cfg.tail_rate.unwrap_or((m1 - m2) / (mid - a));
        let log_tail = if m2 == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else if rate > 0.0 {
            m2 - rate.ln()
        } else {
            f64::INFINITY
        };
        let target = cfg.target(total);
        if seg.converged && log_tail <= target && (seg.log_value <= target || b >= end) {
            return Ok(LogImproper {
                log_value: total,
                log_tail_bound: log_tail,
                truncation_t: b,
                converged: true,
                evaluations,
            });
        }
        if b >= end {
            return Ok(LogImproper {
                log_value: total,
                log_tail_bound: log_tail,
                truncation_t: b,
                converged: false,
                evaluations,
            });
        }
        a = b;
        len *= 2.0;
    }
}
