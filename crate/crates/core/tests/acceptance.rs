//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skewflow::certificate::{Certificate, Profile, StabilityClass};
use skewflow::config::{parse_config, InlineSystem, LogU};
use skewflow::gallery::{self, spike_log_u, GallerySystem, RatioForm, SpikeGrowth};
use skewflow::grid::{GainTable, GridParams, PairRule, SampleGrid};
use skewflow::integral::{self, RolewiczFunction, Weight};
use skewflow::quadrature::QuadratureConfig;
use skewflow::report::{report_json, run};
use skewflow::semiflow::{check_cocycle_axioms, check_semiflow_axioms, random_axiom_samples, StateVector};
use skewflow::stability::{self, check_bves, check_es, FitConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn one() -> StateVector {
    StateVector::scalar(1.0)
}

/// Axioms on 1000 samples, raw log residual below 1e-9, within 5 s.
fn axioms() -> Outcome {
    const TOL: f64 = 1e-9;
    let start = Instant::now();
    let samples = random_axiom_samples(1000, 8.0, 10.0, 2024);
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for g in gallery::standard_gallery() {
        let sys = &g.system;
        violations += check_semiflow_axioms(sys, &samples, TOL).len();
        violations += check_cocycle_axioms(sys, &samples, TOL).len();
        for p in &samples {
            let gain = |t, s, x| sys.scalar_log_gain(t, s, x).unwrap();
            let y = sys.evolve(p.s, p.t0, p.x).unwrap();
            let comp = gain(p.t, p.s, y) + gain(p.s, p.t0, p.x) - gain(p.t, p.t0, p.x);
            worst = worst.max(comp.abs()).max(gain(p.t, p.t, p.x).abs());
            let z = sys.evolve(p.t, p.s, y).unwrap();
            worst = worst.max((z - sys.evolve(p.t, p.t0, p.x).unwrap()).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        violations == 0 && worst < TOL && secs < 5.0,
        format!("5 systems x 1000 samples, violations = {violations}, max residual = {worst:e}, {secs:.3} s"),
    )
}

/// Separation chain on the default grids, within 30 s.
fn separation() -> Outcome {
    let start = Instant::now();
    let expected = [
        ("pure-decay:2", StabilityClass::Ues, None),
        ("exp-sin", StabilityClass::Bves, Some(StabilityClass::Ues)),
        ("spike", StabilityClass::Es, Some(StabilityClass::Bves)),
        ("subexp", StabilityClass::Stable, Some(StabilityClass::Es)),
        ("growth", StabilityClass::Growth, Some(StabilityClass::Stable)),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (id, class, witness_for) in expected {
        let g = gallery::by_id(id).unwrap();
        let grid = SampleGrid::for_gallery(&g, &GridParams::default(), 0).unwrap();
        let v = stability::classify(&g.system, &grid, &FitConfig::default()).unwrap();
        let mut good = v.strongest_class == Some(class);
        if let Some(w) = witness_for {
            match v.refutations.get(&w) {
                Some(r) => good &= r.witness.reevaluate(&g.system, &r.candidate).unwrap() > 0.0,
                None => good = false,
            }
        }
        ok &= good;
        parts.push(format!("{id} -> {}", v.strongest_class.map_or("none", |c| c.tag())));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(ok && secs < 30.0, format!("{}; {secs:.2} s", parts.join(", ")))
}

fn uniform_grid(horizon: f64, steps: usize, extra: &[(f64, f64)]) -> SampleGrid {
    let mut grid = SampleGrid::uniform(horizon, steps).unwrap();
    grid.inject(extra);
    grid
}

/// Printed exp-sin BV constants (N = 1, α = 2, β = 3).
fn exp_sin_printed() -> Outcome {
    let es = gallery::exp_sin_system();
    let grid = uniform_grid(200.0, 140, &[]);
    let points = grid.pairs().len();
    let out = check_bves(&es.system, 0.0, 2.0, 3.0, &grid).unwrap();
    let corrected = check_bves(&es.system, 0.0, 1.0, 3.0, &grid).unwrap();
    let detail = match out.witness() {
        Some(w) => format!(
            "{points} points; violated at t = {}, s = {} (margin {}); (N, α, β) = (1, 1, 3) passes: {}",
            w.t,
            w.s,
            w.margin,
            corrected.passed()
        ),
        None => format!("{points} points, zero violations"),
    };
    outcome(out.passed(), detail)
}

/// Spike ES certificate `N(s) = u(s)e^s`, `α = 1`.
fn spike_es() -> Outcome {
    let sp = gallery::spike_system();
    let family = sp.witness_family.as_ref().unwrap().materialize(40, 200.0);
    let grid = uniform_grid(200.0, 117, &family);
    let points = grid.pairs().len();
    let prof = Profile::custom("log u(s) + s", |s| spike_log_u(SpikeGrowth::SuperExponential, s) + s);
    let out = check_es(&sp.system, prof, 1.0, &grid).unwrap();
    let detail = match out.witness() {
        Some(w) => format!("{points} points; violated at t = {}, s = {} (margin {})", w.t, w.s, w.margin),
        None => format!("{points} points, zero violations"),
    };
    outcome(out.passed(), detail)
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Closed forms on pure decay, each integral under 50 ms.
fn quadrature_oracle() -> Outcome {
    let q = QuadratureConfig::default();
    let mut worst_err: f64 = 0.0;
    let mut worst_ms: f64 = 0.0;
    let mut count = 0;
    let mut time = |f: &mut dyn FnMut() -> (f64, f64)| {
        let t0 = Instant::now();
        let (got, want) = f();
        worst_ms = worst_ms.max(t0.elapsed().as_secs_f64() * 1e3);
        worst_err = worst_err.max(rel(got, want));
        count += 1;
    };
    for lambda in [0.5, 1.0, 2.0] {
        let sys = gallery::pure_decay_system(lambda).unwrap().system;
        let h = lambda / 2.0;
        for s in [0.0, 1.0, 7.5] {
            time(&mut || {
                (integral::gain_integral(&sys, Weight::Gap(h), s, 0.0, &one(), &q).unwrap().value, 2.0 / lambda)
            });
            time(&mut || {
                let c = integral::bv_datko_check(&sys, h, h, &[s], &[0.0], &[one()], 50.0, &q).unwrap();
                (c.n_hat, 2.0 / lambda)
            });
            time(&mut || {
                let f = RolewiczFunction::Power(2.0);
                (integral::rolewicz_integral(&sys, &f, h, s, 0.0, &one(), &q).unwrap().value, 1.0 / lambda)
            });
            for gap in [0.5, 3.0, 40.0] {
                time(&mut || {
                    let r = integral::barbashin_functional(&sys, h, s + gap, s, 0.0, &one(), &q).unwrap();
                    (r.value, (2.0 / lambda) * (1.0 - (-h * gap).exp()))
                });
            }
        }
    }
    outcome(
        worst_err < 1e-6 && worst_ms < 50.0,
        format!("{count} integrals, max relative error {worst_err:e}, slowest {worst_ms:.2} ms"),
    )
}

/// Integral cross-checks (i)-(iv).
fn cross_checks() -> Outcome {
    let q = QuadratureConfig::default();
    let fit = FitConfig::default();
    let ss = [0.0, 1.0, 2.0, 5.0, 10.0, 20.0];
    let mut notes = Vec::new();
    let mut ok = true;

    let mut implication = true;
    let mut reduction: f64 = 0.0;
    for g in gallery::standard_gallery() {
        let d = integral::datko_check(&g.system, 0.5, &ss, &[0.0], &[one()], &q).unwrap();
        let i = integral::integral_stability_check(&g.system, &ss, &[0.0], &[one()], &q).unwrap();
        for (p, u) in d.points.iter().zip(&i.points) {
            if p.converged {
                implication &= u.converged && u.log_value <= p.log_value;
            }
        }
        let r =
            integral::rolewicz_check(&g.system, &RolewiczFunction::Power(1.0), 0.5, &ss, &[0.0], &[one()], &q).unwrap();
        for (p, u) in d.points.iter().zip(&r.points) {
            let diff = if p.value.is_finite() { (p.value - u.value).abs() } else { (p.log_value - u.log_value).abs() };
            reduction = reduction.max(diff);
        }
    }
    ok &= implication && reduction <= 1e-10;
    notes.push(format!("(i) {implication}, (ii) max |R - D| = {reduction:e}"));

    let mut prop = true;
    for lambda in [0.5, 1.0, 2.0] {
        let sys = gallery::pure_decay_system(lambda).unwrap().system;
        let r = integral::proposition_crosscheck(&sys, &SampleGrid::uniform(50.0, 50).unwrap(), &q, &fit).unwrap();
        prop &= r.applicable && r.passed();
    }
    ok &= prop;
    notes.push(format!("(iii) {prop}"));

    let mut bounded = Vec::new();
    let mut consistent = true;
    for g in gallery::standard_gallery() {
        let times = SampleGrid::log_times(200.0, 30, 0.01);
        let grid = SampleGrid::new(times, PairRule::Full, vec![0.0], vec![one()]).unwrap();
        let c = integral::barbashin_check(&g.system, 0.5, &grid, &q, &fit).unwrap();
        consistent &= c.consistent;
        if c.bounded {
            bounded.push(format!("{} -> {}", g.id, c.confirmed_class.map_or("none", |k| k.tag())));
        }
    }
    ok &= consistent;
    notes.push(format!("(iv) bounded B̂ on [{}], consistent: {consistent}", bounded.join(", ")));
    outcome(ok, notes.join("; "))
}

fn random_nodes(rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let k = rng.gen_range(3..10);
    let mut t = 0.0;
    let mut v: f64 = 0.0;
    let slope = rng.gen_range(-1.0..3.0);
    (0..k)
        .map(|_| {
            let p = (t, v);
            let dt = rng.gen_range(0.5..8.0);
            t += dt;
            v += slope * dt + rng.gen_range(-4.0..4.0);
            p
        })
        .collect()
}

/// Weakening chain on 50 random piecewise-linear cocycles.
fn lattice() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let fit = FitConfig::default();
    let forms = [RatioForm::Plain, RatioForm::DecayWeighted, RatioForm::GrowthWeighted];
    let (mut tried, mut counterexamples) = (0, 0);
    for _ in 0..50 {
        let inline = InlineSystem {
            log_u: LogU::Nodes(random_nodes(&mut rng)),
            form: forms[rng.gen_range(0..3)],
            semiflow: "translation".into(),
        };
        let g: GallerySystem = inline.build().unwrap();
        let grid = SampleGrid::scalar(SampleGrid::log_times(60.0, 40, 0.05)).unwrap();
        let table = GainTable::build(&g.system, &grid).unwrap();
        let mut certs: Vec<Certificate> =
            StabilityClass::CHAIN.iter().filter_map(|c| stability::fit_class(&table, *c, &fit).certificate).collect();
        certs.extend(stability::classify_table(&table, &fit).unwrap().certificates.into_values());
        for cert in certs {
            let mut c = cert;
            if !stability::check_on_table(&table, &c, fit.check_tol).unwrap().passed() {
                continue;
            }
            while let Some(w) = c.weaken() {
                tried += 1;
                if !stability::check_on_table(&table, &w, fit.check_tol).unwrap().passed() {
                    counterexamples += 1;
                }
                c = w;
            }
        }
    }
    outcome(
        counterexamples == 0 && tried > 0,
        format!("{tried} implied certificates checked, {counterexamples} counterexamples"),
    )
}

/// Byte-identical reports from two runs of the default configs.
fn determinism() -> Outcome {
    let mut same = true;
    for id in ["pure-decay:2", "exp-sin", "spike", "subexp", "growth"] {
        let text = format!(
            "system={id} seed=11 task=classify task=datko d=0.5 task=integral task=rolewicz task=bv-datko task=barbashin task=proposition"
        );
        let cfg = parse_config(&text).unwrap();
        let a = report_json(&run(&cfg, false).unwrap().report);
        let b = report_json(&run(&cfg, true).unwrap().report);
        let c = report_json(&run(&cfg, false).unwrap().report);
        same &= a == b && a == c;
    }
    outcome(same, "5 systems, all tasks, sequential/parallel/sequential runs compared byte for byte")
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1  axiom suite", axioms),
        ("2  separation chain", separation),
        ("3a exp-sin BV certificate (N=1, α=2, β=3)", exp_sin_printed),
        ("3b spike ES certificate (N(s)=u(s)e^s, α=1)", spike_es),
        ("4  quadrature oracle", quadrature_oracle),
        ("5  integral cross-checks", cross_checks),
        ("6  implication lattice", lattice),
        ("7  determinism", determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let o = f();
        println!("[{}] criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
