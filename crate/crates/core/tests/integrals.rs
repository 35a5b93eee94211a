use proptest::prelude::*;

use skewflow::gallery;
use skewflow::integral::{gain_integral, rolewicz_integral, RolewiczFunction, Weight};
use skewflow::quadrature::{log_integrate, log_integrate_improper, QuadratureConfig};
use skewflow::semiflow::StateVector;

/// `log ∫_a^b e^{g}` for `g` linear from `ga` to `gb`.
fn log_segment(a: f64, b: f64, ga: f64, gb: f64) -> f64 {
    let hi = ga.max(gb);
    let x = (gb - ga).abs();
    let shape = if x < 1e-12 { 0.0 } else { (-(-x).exp_m1() / x).ln() };
    hi + (b - a).ln() + shape
}

fn log_sum(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Exact `log ∫_s^∞ e^{d(t-s)} u(s)/u(t) e^{-(t-s)} dt` for the spike at integer `s`,
/// summed segment by segment over the node table.
fn spike_datko_exact(s: u32, d: f64) -> f64 {
    let node = |n: u32| if n == 0 { 0.0 } else { n as f64 * 4f64.powi(n as i32) };
    let log_us = node(s);
    let mut knots = Vec::new();
    for n in s..s + 60 {
        let nf = n as f64;
        knots.push((nf, node(n)));
        knots.push((nf + 0.25f64.powi(n as i32), 0.0));
    }
    let g = |t: f64, lu: f64| log_us - lu - (1.0 - d) * (t - s as f64);
    let terms: Vec<f64> =
        knots.windows(2).map(|w| log_segment(w[0].0, w[1].0, g(w[0].0, w[0].1), g(w[1].0, w[1].1))).collect();
    log_sum(&terms)
}

#[test]
fn spike_datko_matches_piecewise_exponential_sum() {
    let sp = gallery::spike_system();
    let q = QuadratureConfig::default();
    for s in [1u32, 2, 3, 5] {
        let r = gain_integral(&sp.system, Weight::Gap(0.5), s as f64, 0.0, &StateVector::scalar(1.0), &q).unwrap();
        let exact = spike_datko_exact(s, 0.5);
        assert!(r.converged);
        assert!((r.log_value - exact).abs() < 1e-7, "s = {s}: {} vs {exact}", r.log_value);
    }
}

#[test]
fn pure_decay_rolewicz_power_family() {
    let q = QuadratureConfig::default();
    let sys = gallery::pure_decay_system(1.0).unwrap().system;
    for p in [1.0, 2.0, 3.0] {
        let r = rolewicz_integral(&sys, &RolewiczFunction::Power(p), 0.25, 4.0, 0.0, &StateVector::scalar(1.0), &q)
            .unwrap();
        let exact = 1.0 / (p * 0.75);
        assert!(((r.value - exact) / exact).abs() < 1e-8, "p = {p}");
    }
}

#[test]
fn truncated_value_grows_with_horizon() {
    let sys = gallery::subexp_system().system;
    let mut prev = f64::NEG_INFINITY;
    for h in [10.0, 40.0, 160.0, 400.0] {
        let q = QuadratureConfig { max_horizon: h, ..QuadratureConfig::default() };
        let r = gain_integral(&sys, Weight::None, 0.0, 0.0, &StateVector::scalar(1.0), &q).unwrap();
        assert!(!r.converged);
        assert!(r.log_value >= prev);
        prev = r.log_value;
    }
}

#[test]
fn exp_sin_integral_stability_diverges_with_rate_one() {
    let es = gallery::exp_sin_system();
    let q = QuadratureConfig::default();
    let bounded = gain_integral(&es.system, Weight::Absolute(0.5), 0.0, 0.0, &StateVector::scalar(1.0), &q).unwrap();
    assert!(bounded.converged);
    let divergent = gain_integral(&es.system, Weight::Absolute(1.0), 0.0, 0.0, &StateVector::scalar(1.0), &q).unwrap();
    assert!(!divergent.converged);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn panel_cap_does_not_change_value(k in -3.0f64..3.0, c in -5.0f64..5.0, w in 0.5f64..20.0, cap in 0.05f64..2.0) {
        let q = QuadratureConfig::default();
        let lf = |t: f64| Ok(c + k * t + (3.0 * t).sin());
        let coarse = log_integrate(lf, 0.0, w, &[], None, &q).unwrap();
        let fine = log_integrate(lf, 0.0, w, &[], Some(cap), &q).unwrap();
        prop_assert!(coarse.converged && fine.converged);
        prop_assert!((coarse.log_value - fine.log_value).abs() < 1e-8);
    }

    #[test]
    fn exponential_tail_is_exact(rate in 0.05f64..5.0, s in 0.0f64..50.0) {
        let q = QuadratureConfig::default();
        let r = log_integrate_improper(|t| Ok(-rate * (t - s)), s, &|_, _| Vec::new(), None, &q).unwrap();
        prop_assert!(r.converged);
        prop_assert!((r.log_value + rate.ln()).abs() < 1e-8);
    }

    #[test]
    fn log_integral_is_shift_equivariant(k in -2.0f64..2.0, shift in -600.0f64..600.0) {
        let q = QuadratureConfig::default();
        let base = log_integrate(|t| Ok(k * t), 0.0, 3.0, &[], None, &q).unwrap();
        let moved = log_integrate(|t| Ok(shift + k * t), 0.0, 3.0, &[], None, &q).unwrap();
        prop_assert!((moved.log_value - base.log_value - shift).abs() < 1e-9 * (1.0 + shift.abs()));
    }
}
