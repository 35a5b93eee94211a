//! Evolution semiflows, evolution cocycles and the skew-evolution semiflows
//! built from them.
//!
//! Scalar cocycles are carried entirely in log-magnitude form: the system
//! stores `log |Φ(t,s,x)|` and never exponentiates it. Matrix cocycles (dimension
//! at most [`MAX_DIM`]) are evaluated as dense matrices and reduced to the log of
//! the gain `‖Φ(t,s,x)v‖ / ‖v‖`.
//!
//! The base space X is a real scalar; its metric is never used.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{ensure_order, finite, Error, Result};

/// Largest supported state-space dimension for matrix cocycles.
pub const MAX_DIM: usize = 8;

/// Default absolute tolerance for axiom residuals (log space for scalar cocycles).
pub const AXIOM_TOL: f64 = 1e-9;

pub type BasePoint = f64;

pub type ScalarLogMap = Arc<dyn Fn(f64, f64, BasePoint) -> f64 + Send + Sync>;
pub type MatrixMap = Arc<dyn Fn(f64, f64, BasePoint) -> DMatrix<f64> + Send + Sync>;
pub type SemiflowMap = Arc<dyn Fn(f64, f64, BasePoint) -> BasePoint + Send + Sync>;
pub type BreakpointMap = Arc<dyn Fn(f64, f64) -> Vec<f64> + Send + Sync>;

/// A pair `(t, s)` with `t >= s >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimePair {
    pub t: f64,
    pub s: f64,
}

impl TimePair {
    pub fn new(t: f64, s: f64) -> Result<Self> {
        ensure_order(t, s)?;
        Ok(Self { t, s })
    }

    pub fn gap(&self) -> f64 {
        self.t - self.s
    }
}

/// A vector of the state space together with its cached Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    data: DVector<f64>,
    norm: f64,
}

impl StateVector {
    pub fn new(components: Vec<f64>) -> Self {
        let data = DVector::from_vec(components);
        let norm = data.norm();
        Self { data, norm }
    }

    pub fn scalar(v: f64) -> Self {
        Self::new(vec![v])
    }

    /// The `i`-th axis vector of `R^dim`.
    pub fn axis(dim: usize, i: usize) -> Self {
        let mut c = vec![0.0; dim];
        c[i] = 1.0;
        Self::new(c)
    }

    pub fn normalized(&self) -> Result<Self> {
        if self.norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(Self::from_dvector(&self.data / self.norm))
    }

    fn from_dvector(data: DVector<f64>) -> Self {
        let norm = data.norm();
        Self { data, norm }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn components(&self) -> &[f64] {
        self.data.as_slice()
    }

    pub fn as_dvector(&self) -> &DVector<f64> {
        &self.data
    }
}

impl Serialize for StateVector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.components().serialize(serializer)
    }
}

/// Evolution semiflow `φ` on the base space.
#[derive(Clone)]
pub enum Semiflow {
    /// `φ(t,s,x) = t - s + x`.
    Translation,
    /// `φ(t,s,x) = x`.
    Constant,
    Custom(SemiflowMap),
}

impl Semiflow {
    pub fn evolve(&self, t: f64, s: f64, x: BasePoint) -> BasePoint {
        match self {
            Semiflow::Translation => t - s + x,
            Semiflow::Constant => x,
            Semiflow::Custom(f) => f(t, s, x),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Semiflow::Translation => "translation",
            Semiflow::Constant => "constant",
            Semiflow::Custom(_) => "custom",
        }
    }
}

impl fmt::Debug for Semiflow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Evolution cocycle `Φ` over a semiflow.
#[derive(Clone)]
pub enum Cocycle {
    /// `log |Φ(t,s,x)|` of a scalar cocycle.
    ScalarLog(ScalarLogMap),
    /// Dense matrix cocycle on `R^dim`.
    Matrix { dim: usize, map: MatrixMap },
}

impl Cocycle {
    pub fn matrix(dim: usize, map: MatrixMap) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidParameter(format!(
                "matrix cocycle dimension must be in 1..={MAX_DIM}, got {dim}"
            )));
        }
        Ok(Cocycle::Matrix { dim, map })
    }

    pub fn dim(&self) -> usize {
        match self {
            Cocycle::ScalarLog(_) => 1,
            Cocycle::Matrix { dim, .. } => *dim,
        }
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, Cocycle::ScalarLog(_))
    }
}

impl fmt::Debug for Cocycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cocycle::ScalarLog(_) => f.write_str("scalar-log"),
            Cocycle::Matrix { dim, .. } => write!(f, "matrix({dim})"),
        }
    }
}

/// Evolution operator `E(t,s)` on the state space.
#[derive(Clone)]
pub enum EvolutionOperator {
    /// `log |E(t,s)|` of a scalar operator.
    ScalarLog(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
    Matrix {
        dim: usize,
        map: Arc<dyn Fn(f64, f64) -> DMatrix<f64> + Send + Sync>,
    },
}

impl EvolutionOperator {
    pub fn identity() -> Self {
        EvolutionOperator::ScalarLog(Arc::new(|_, _| 0.0))
    }

    /// Largest residual of `E(t,t) = I` and `E(t,s)E(s,t0) = E(t,t0)` over the samples.
    pub fn axiom_residual(&self, samples: &[AxiomSample]) -> f64 {
        let mut worst = 0.0_f64;
        for p in samples {
            let r = match self {
                EvolutionOperator::ScalarLog(e) => {
                    let id = e(p.t, p.t).abs();
                    let comp = (e(p.t, p.s) + e(p.s, p.t0) - e(p.t, p.t0)).abs();
                    id.max(comp)
                }
                EvolutionOperator::Matrix { dim, map } => {
                    let id = (map(p.t, p.t) - DMatrix::identity(*dim, *dim)).norm();
                    let full = map(p.t, p.t0);
                    let comp = (map(p.t, p.s) * map(p.s, p.t0) - &full).norm() / full.norm().max(1.0);
                    id.max(comp)
                }
            };
            worst = worst.max(if r.is_nan() { f64::INFINITY } else { r });
        }
        worst
    }
}

/// A skew-evolution semiflow `C = (φ, Φ)`, immutable after construction.
#[derive(Clone)]
pub struct SkewEvolutionSystem {
    label: String,
    semiflow: Semiflow,
    cocycle: Cocycle,
    shift: f64,
    breakpoints: Option<BreakpointMap>,
    max_panel: Option<f64>,
}

impl fmt::Debug for SkewEvolutionSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SkewEvolutionSystem")
            .field("label", &self.label)
            .field("semiflow", &self.semiflow)
            .field("cocycle", &self.cocycle)
            .field("shift", &self.shift)
            .finish()
    }
}

impl SkewEvolutionSystem {
    pub fn new(label: impl Into<String>, semiflow: Semiflow, cocycle: Cocycle) -> Self {
        Self { label: label.into(), semiflow, cocycle, shift: 0.0, breakpoints: None, max_panel: None }
    }

    /// Points where the cocycle's log-gain has kinks; quadrature panels break there.
    pub fn with_breakpoints(mut self, breakpoints: BreakpointMap) -> Self {
        self.breakpoints = Some(breakpoints);
        self
    }

    /// Upper bound on quadrature panel width needed to resolve the cocycle.
    pub fn with_max_panel(mut self, width: f64) -> Self {
        self.max_panel = Some(width);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn semiflow(&self) -> &Semiflow {
        &self.semiflow
    }

    pub fn cocycle(&self) -> &Cocycle {
        &self.cocycle
    }

    pub fn dim(&self) -> usize {
        self.cocycle.dim()
    }

    /// Accumulated exponential shift `α` (see [`shift`]).
    pub fn shift_rate(&self) -> f64 {
        self.shift
    }

    pub fn max_panel(&self) -> Option<f64> {
        self.max_panel
    }

    /// Sorted kink locations of the log-gain inside `(lo, hi)`.
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut pts = match &self.breakpoints {
            Some(f) => f(lo, hi),
            None => Vec::new(),
        };
        pts.retain(|p| *p > lo && *p < hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// `φ(t,s,x)`.
    pub fn evolve(&self, t: f64, s: f64, x: BasePoint) -> Result<BasePoint> {
        ensure_order(t, s)?;
        finite(self.semiflow.evolve(t, s, x), "semiflow value")
    }

    /// `log(‖Φ(t,s,x)v‖ / ‖v‖)`.
    pub fn log_gain(&self, t: f64, s: f64, x: BasePoint, v: &StateVector) -> Result<f64> {
        ensure_order(t, s)?;
        if v.norm() == 0.0 {
            return Err(Error::ZeroVector);
        }
        let base = match &self.cocycle {
            Cocycle::ScalarLog(g) => g(t, s, x),
            Cocycle::Matrix { dim, map } => {
                if v.dim() != *dim {
                    return Err(Error::Dimension { expected: *dim, got: v.dim() });
                }
                let image = map(t, s, x) * v.as_dvector();
                image.norm().ln() - v.norm().ln()
            }
        };
        finite(base + self.shift * (t - s), "log gain")
    }

    /// Log gain of a scalar cocycle; the state vector is irrelevant there.
    pub fn scalar_log_gain(&self, t: f64, s: f64, x: BasePoint) -> Result<f64> {
        self.log_gain(t, s, x, &StateVector::scalar(1.0))
    }

    /// `log(‖Φ(t,τ,φ(τ,s,x))* v*‖ / ‖v*‖)`, with the dual identified with `V`.
    pub fn adjoint_log_gain(&self, t: f64, tau: f64, s: f64, x: BasePoint, vstar: &StateVector) -> Result<f64> {
        ensure_order(t, tau)?;
        ensure_order(tau, s)?;
        let y = self.evolve(tau, s, x)?;
        match &self.cocycle {
            Cocycle::ScalarLog(_) => {
                if vstar.norm() == 0.0 {
                    return Err(Error::ZeroVector);
                }
                self.scalar_log_gain(t, tau, y)
            }
            Cocycle::Matrix { dim, map } => {
                if vstar.norm() == 0.0 {
                    return Err(Error::ZeroVector);
                }
                if vstar.dim() != *dim {
                    return Err(Error::Dimension { expected: *dim, got: vstar.dim() });
                }
                let image = map(t, tau, y).transpose() * vstar.as_dvector();
                let g = image.norm().ln() - vstar.norm().ln();
                finite(g + self.shift * (t - tau), "adjoint log gain")
            }
        }
    }

    /// Matrix of `Φ(t,s,x)` including the shift factor.
    fn operator(&self, t: f64, s: f64, x: BasePoint) -> DMatrix<f64> {
        match &self.cocycle {
            Cocycle::ScalarLog(g) => DMatrix::from_element(1, 1, (g(t, s, x) + self.shift * (t - s)).exp()),
            Cocycle::Matrix { map, .. } => map(t, s, x) * (self.shift * (t - s)).exp(),
        }
    }
}

/// The `α`-shifted system: `Φ_α(t,s,x) = e^{α(t-s)} Φ(t,s,x)`, same semiflow.
pub fn shift(sys: &SkewEvolutionSystem, alpha: f64) -> SkewEvolutionSystem {
    let mut shifted = sys.clone();
    shifted.shift += alpha;
    shifted.label = format!("{}+shift({alpha})", sys.label);
    shifted
}

/// Skew-evolution semiflow generated by an evolution operator:
/// `φ(t,s,x) = t - s + x`, `Φ(t,s,x) = E(t - s + x, x)`.
pub fn from_evolution_operator(op: &EvolutionOperator, label: impl Into<String>) -> Result<SkewEvolutionSystem> {
    let cocycle = match op.clone() {
        EvolutionOperator::ScalarLog(e) => Cocycle::ScalarLog(Arc::new(move |t: f64, s: f64, x: f64| e(t - s + x, x))),
        EvolutionOperator::Matrix { dim, map } => {
            Cocycle::matrix(dim, Arc::new(move |t: f64, s: f64, x: f64| map(t - s + x, x)))?
        }
    };
    Ok(SkewEvolutionSystem::new(label, Semiflow::Translation, cocycle))
}

/// A sample `(t, s, t0, x)` with `t >= s >= t0 >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxiomSample {
    pub t: f64,
    pub s: f64,
    pub t0: f64,
    pub x: BasePoint,
}

/// Seeded random axiom samples with all times in `[0, horizon]` and `x` in `[0, x_max]`.
pub fn random_axiom_samples(count: usize, horizon: f64, x_max: f64, seed: u64) -> Vec<AxiomSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut ts = [rng.gen_range(0.0..=horizon), rng.gen_range(0.0..=horizon), rng.gen_range(0.0..=horizon)];
            ts.sort_by(|a, b| b.total_cmp(a));
            AxiomSample { t: ts[0], s: ts[1], t0: ts[2], x: rng.gen_range(0.0..=x_max) }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AxiomLaw {
    SemiflowIdentity,
    SemiflowComposition,
    CocycleIdentity,
    CocycleComposition,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomViolation {
    pub sample: AxiomSample,
    pub law: AxiomLaw,
    pub residual: f64,
}

/// Residual acceptance with rounding headroom proportional to the magnitudes involved.
pub(crate) fn within_tolerance(residual: f64, tol: f64, scale: f64) -> bool {
    residual <= tol + 4.0 * f64::EPSILON * scale
}

fn sample_ok(p: &AxiomSample) -> bool {
    p.t >= p.s && p.s >= p.t0 && p.t0 >= 0.0
}

/// Samples where `φ(t,t,x) = x` or `φ(t,s,φ(s,t0,x)) = φ(t,t0,x)` fail beyond `tol`.
pub fn check_semiflow_axioms(sys: &SkewEvolutionSystem, samples: &[AxiomSample], tol: f64) -> Vec<AxiomViolation> {
    let phi = sys.semiflow();
    let mut out = Vec::new();
    for p in samples.iter().filter(|p| sample_ok(p)) {
        let id = phi.evolve(p.t, p.t, p.x);
        let r1 = (id - p.x).abs();
        if !(within_tolerance(r1, tol, p.x.abs()) && r1.is_finite()) {
            out.push(AxiomViolation { sample: *p, law: AxiomLaw::SemiflowIdentity, residual: r1 });
        }
        let lhs = phi.evolve(p.t, p.s, phi.evolve(p.s, p.t0, p.x));
        let rhs = phi.evolve(p.t, p.t0, p.x);
        let r2 = (lhs - rhs).abs();
        if !(within_tolerance(r2, tol, lhs.abs().max(rhs.abs()) + p.t) && r2.is_finite()) {
            out.push(AxiomViolation { sample: *p, law: AxiomLaw::SemiflowComposition, residual: r2 });
        }
    }
    out
}

/// Samples where `Φ(t,t,x) = I` or `Φ(t,s,φ(s,t0,x))Φ(s,t0,x) = Φ(t,t0,x)` fail beyond `tol`.
///
/// Scalar cocycles are compared in log space; matrix cocycles by the relative
/// Frobenius residual.
pub fn check_cocycle_axioms(sys: &SkewEvolutionSystem, samples: &[AxiomSample], tol: f64) -> Vec<AxiomViolation> {
    let mut out = Vec::new();
    for p in samples.iter().filter(|p| sample_ok(p)) {
        let y = sys.semiflow().evolve(p.s, p.t0, p.x);
        let (r1, s1, r2, s2) = match sys.cocycle() {
            Cocycle::ScalarLog(_) => {
                let g = |t, s, x| sys.scalar_log_gain(t, s, x).unwrap_or(f64::NAN);
                let id = g(p.t, p.t, p.x);
                let a = g(p.t, p.s, y);
                let b = g(p.s, p.t0, p.x);
                let c = g(p.t, p.t0, p.x);
                (id.abs(), 0.0, (a + b - c).abs(), a.abs() + b.abs() + c.abs())
            }
            Cocycle::Matrix { dim, .. } => {
                let id = (sys.operator(p.t, p.t, p.x) - DMatrix::identity(*dim, *dim)).norm();
                let full = sys.operator(p.t, p.t0, p.x);
                let scale = full.norm().max(1.0);
                let comp = (sys.operator(p.t, p.s, y) * sys.operator(p.s, p.t0, p.x) - &full).norm() / scale;
                (id, 1.0, comp, 1.0)
            }
        };
        if !(r1.is_finite() && within_tolerance(r1, tol, s1)) {
            out.push(AxiomViolation { sample: *p, law: AxiomLaw::CocycleIdentity, residual: r1 });
        }
        if !(r2.is_finite() && within_tolerance(r2, tol, s2)) {
            out.push(AxiomViolation { sample: *p, law: AxiomLaw::CocycleComposition, residual: r2 });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn exp_sin() -> SkewEvolutionSystem {
        SkewEvolutionSystem::new(
            "exp-sin",
            Semiflow::Translation,
            Cocycle::ScalarLog(Arc::new(|t: f64, s: f64, _| t * t.sin() - s * s.sin() + 2.0 * (s - t))),
        )
    }

    fn pure_decay(lambda: f64) -> SkewEvolutionSystem {
        SkewEvolutionSystem::new(
            "pure-decay",
            Semiflow::Translation,
            Cocycle::ScalarLog(Arc::new(move |t: f64, s: f64, _| -lambda * (t - s))),
        )
    }

    fn diag_decay(rates: Vec<f64>) -> SkewEvolutionSystem {
        let dim = rates.len();
        let map: MatrixMap = Arc::new(move |t: f64, s: f64, _| {
            DMatrix::from_diagonal(&DVector::from_iterator(dim, rates.iter().map(|r| (-r * (t - s)).exp())))
        });
        SkewEvolutionSystem::new("diag", Semiflow::Constant, Cocycle::matrix(dim, map).unwrap())
    }

    #[test]
    fn evolve_examples() {
        let sys = pure_decay(1.0);
        assert_eq!(sys.evolve(5.0, 2.0, 1.0).unwrap(), 4.0);
        assert_eq!(sys.evolve(3.0, 3.0, 7.0).unwrap(), 7.0);
        let c = SkewEvolutionSystem::new("c", Semiflow::Constant, Cocycle::ScalarLog(Arc::new(|_, _, _| 0.0)));
        assert_eq!(c.evolve(9.0, 1.0, 2.0).unwrap(), 2.0);
        assert!(matches!(sys.evolve(1.0, 2.0, 0.0), Err(Error::TimeOrder { .. })));
    }

    #[test]
    fn log_gain_examples() {
        let g = exp_sin().scalar_log_gain(PI / 2.0, 0.0, 0.0).unwrap();
        assert!((g + PI / 2.0).abs() < 1e-12);
        assert_eq!(exp_sin().scalar_log_gain(4.0, 4.0, 1.0).unwrap(), 0.0);
        assert_eq!(pure_decay(2.0).scalar_log_gain(3.0, 1.0, 0.0).unwrap(), -4.0);
        let err = pure_decay(2.0).log_gain(3.0, 1.0, 0.0, &StateVector::scalar(0.0));
        assert_eq!(err, Err(Error::ZeroVector));
    }

    #[test]
    fn non_finite_gain_is_an_evaluation_failure() {
        let sys = SkewEvolutionSystem::new("bad", Semiflow::Constant, Cocycle::ScalarLog(Arc::new(|_, _, _| f64::NAN)));
        assert!(matches!(sys.scalar_log_gain(1.0, 0.0, 0.0), Err(Error::Evaluation(_))));
    }

    #[test]
    fn adjoint_examples() {
        assert_eq!(pure_decay(2.0).adjoint_log_gain(3.0, 2.0, 0.0, 0.0, &StateVector::scalar(1.0)).unwrap(), -2.0);
        let d = diag_decay(vec![1.0, 2.0]);
        let g = d.adjoint_log_gain(2.0, 1.0, 0.0, 0.0, &StateVector::new(vec![0.0, 1.0])).unwrap();
        assert!((g + 2.0).abs() < 1e-12);
        let g = d.adjoint_log_gain(2.0, 2.0, 0.5, 0.0, &StateVector::new(vec![0.3, 0.4])).unwrap();
        assert!(g.abs() < 1e-15);
    }

    #[test]
    fn shift_examples() {
        let s = shift(&pure_decay(2.0), 2.0);
        assert_eq!(s.scalar_log_gain(7.0, 1.5, 0.0).unwrap(), 0.0);
        let base = exp_sin();
        let z = shift(&base, 0.0);
        assert_eq!(z.scalar_log_gain(3.3, 1.1, 0.0), base.scalar_log_gain(3.3, 1.1, 0.0));
        let one = shift(&base, 1.0);
        assert!(one.scalar_log_gain(PI / 2.0, 0.0, 0.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn operator_induced_examples() {
        let e = EvolutionOperator::ScalarLog(Arc::new(|t: f64, s: f64| -(t - s)));
        let sys = from_evolution_operator(&e, "exp").unwrap();
        for x in [0.0, 1.0, 7.5] {
            assert!((sys.scalar_log_gain(4.0, 1.5, x).unwrap() + 2.5).abs() < 1e-12);
        }
        let id = from_evolution_operator(&EvolutionOperator::identity(), "id").unwrap();
        assert_eq!(id.scalar_log_gain(9.0, 2.0, 3.0).unwrap(), 0.0);

        let e = EvolutionOperator::ScalarLog(Arc::new(|t: f64, s: f64| (s - t) + t.sin() - s.sin()));
        let sys = from_evolution_operator(&e, "sin").unwrap();
        let (t, s, x): (f64, f64, f64) = (3.7, 1.2, 0.4);
        let expected = (s - t) + (t - s + x).sin() - x.sin();
        assert!((sys.scalar_log_gain(t, s, x).unwrap() - expected).abs() < 1e-12);
        let samples = random_axiom_samples(500, 20.0, 5.0, 3);
        assert!(e.axiom_residual(&samples) < 1e-12);
        assert!(check_semiflow_axioms(&sys, &samples, AXIOM_TOL).is_empty());
        assert!(check_cocycle_axioms(&sys, &samples, AXIOM_TOL).is_empty());
    }

    #[test]
    fn matrix_operator_induced_axioms() {
        let e = EvolutionOperator::Matrix {
            dim: 2,
            map: Arc::new(|t: f64, s: f64| {
                let r = t - s;
                DMatrix::from_row_slice(2, 2, &[(-r).exp(), r * (-r).exp(), 0.0, (-r).exp()])
            }),
        };
        let samples = random_axiom_samples(300, 10.0, 3.0, 11);
        assert!(e.axiom_residual(&samples) < 1e-12);
        let sys = from_evolution_operator(&e, "jordan").unwrap();
        assert!(check_cocycle_axioms(&sys, &samples, AXIOM_TOL).is_empty());
        assert!(check_cocycle_axioms(&shift(&sys, 0.3), &samples, AXIOM_TOL).is_empty());
    }

    #[test]
    fn broken_semiflow_is_reported() {
        let sys = SkewEvolutionSystem::new(
            "broken",
            Semiflow::Custom(Arc::new(|t: f64, _s: f64, x: f64| t + x)),
            Cocycle::ScalarLog(Arc::new(|_, _, _| 0.0)),
        );
        let v = check_semiflow_axioms(&sys, &[AxiomSample { t: 2.0, s: 1.0, t0: 0.0, x: 0.0 }], AXIOM_TOL);
        let comp: Vec<_> = v.iter().filter(|v| v.law == AxiomLaw::SemiflowComposition).collect();
        assert_eq!(comp.len(), 1);
        assert_eq!(comp[0].residual, 1.0);
        assert!(check_semiflow_axioms(&sys, &[], AXIOM_TOL).is_empty());
    }

    #[test]
    fn exp_sin_cocycle_axioms_and_degenerate_sample() {
        let sys = exp_sin();
        let samples = random_axiom_samples(1000, 60.0, 10.0, 7);
        assert!(check_cocycle_axioms(&sys, &samples, AXIOM_TOL).is_empty());
        let p = AxiomSample { t: 2.0, s: 2.0, t0: 2.0, x: 1.0 };
        assert!(check_cocycle_axioms(&sys, &[p], 0.0).is_empty());
    }

    #[test]
    fn matrix_dimension_limits() {
        let map: MatrixMap = Arc::new(|_, _, _| DMatrix::identity(9, 9));
        assert!(Cocycle::matrix(9, map).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn shift_adds_alpha_times_gap(t in 0.0f64..200.0, frac in 0.0f64..1.0, alpha in -5.0f64..5.0) {
                let s = t * frac;
                let base = exp_sin();
                let shifted = shift(&base, alpha);
                let d = shifted.scalar_log_gain(t, s, 0.0).unwrap() - base.scalar_log_gain(t, s, 0.0).unwrap();
                let expected = alpha * (t - s);
                prop_assert!((d - expected).abs() <= 8.0 * f64::EPSILON * (1.0 + t * 4.0 + expected.abs()));
            }

            #[test]
            fn scalar_adjoint_matches_forward_gain(t in 0.0f64..50.0, a in 0.0f64..1.0, b in 0.0f64..1.0, x in 0.0f64..5.0) {
                let tau = t * a;
                let s = tau * b;
                let sys = from_evolution_operator(
                    &EvolutionOperator::ScalarLog(Arc::new(|t: f64, s: f64| (s - t) + t.sin() - s.sin())),
                    "sin",
                ).unwrap();
                let y = sys.evolve(tau, s, x).unwrap();
                let lhs = sys.adjoint_log_gain(t, tau, s, x, &StateVector::scalar(-3.0)).unwrap();
                let rhs = sys.log_gain(t, tau, y, &StateVector::scalar(1.0)).unwrap();
                prop_assert_eq!(lhs, rhs);
            }
        }
    }
}
