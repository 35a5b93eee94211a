//! Analysis configuration: a flat `key=value` text format.
//!
//! Pairs are separated by whitespace or newlines, `#` starts a comment, and
//! `task=` may repeat (tasks run in the listed order). Every other key may
//! appear at most once. [`AnalysisConfig::echo`] writes every field,
//! defaults included, in a form that parses back to the same config.
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `system` | gallery id (`exp-sin`, `spike`, `spike-literal`, `subexp`, `growth`, `pure-decay:<λ>`) or `inline` | required |
//! | `u.kind` | inline `log u`: `nodes`, `oscillating` (`a·t + b·t·sin(c·t)`), `log1p`, `constant` | `nodes` |
//! | `u.nodes` | `t:logu` pairs, comma separated | `0:0` |
//! | `u.a`, `u.b`, `u.c` | oscillating coefficients | `0`, `0`, `1` |
//! | `u.value` | constant `log u` | `0` |
//! | `u.form` | `plain`, `decay-weighted`, `growth-weighted` | `plain` |
//! | `u.semiflow` | `translation`, `constant` | `translation` |
//! | `task` | `classify`, `check:<class>`, `fit:<class>`, `datko`, `integral`, `rolewicz`, `bv-datko`, `barbashin`, `proposition` | none |
//! | `horizon`, `t_points`, `t_min`, `n_max`, `band`, `x_count`, `x_max`, `v_random` | sample grid | 200, 120, 0.01, 40, none, 2, 10, 16 |
//! | `rel_tol`, `abs_tol`, `max_horizon`, `max_panel`, `max_panels`, `tail_rate` | quadrature | 1e-8, 1e-12, 500, none, 4000, none |
//! | `log_n_cap`, `alpha_min`, `alpha_max`, `beta_cap`, `omega_max`, `fit_tol`, `check_tol` | fitting | 50, 1e-3, 50, 50, 50, 1e-6, 1e-9 |
//! | `N` or `logN`, `logN_slope` | certificate constant `log N(s) = logN + logN_slope·s` (`N` sets `logN = ln N`) | `logN=0`, 0 |
//! | `alpha`, `beta`, `omega` | certificate rates | 1, 1, 0 |
//! | `d` | Datko / Rolewicz gap weight | 1 |
//! | `a`, `b` | BV-Datko weights | 0.5, 1 |
//! | `barbashin_b`, `barbashin_points` | Barbashin weight and grid size | 0.5, 30 |
//! | `F` | Rolewicz function: `r`, `r^<p>`, `saturating` | `r` |
//! | `s_values` | comma-separated `s` for integral profiles | `0,1,2,5,10,20` |
//! | `seed` | random seed | 0 |
//! | `formats` | comma-separated subset of `json`, `table`, `plot` | `json,table,plot` |

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::{self, Display, Write as _};
use std::sync::Arc;

use crate::certificate::{Certificate, Profile, StabilityClass};
use crate::error::{Error, Result};
use crate::gallery::{self, GallerySystem, RatioForm};
use crate::grid::GridParams;
use crate::integral::RolewiczFunction;
use crate::interp::PiecewiseLinear;
use crate::quadrature::QuadratureConfig;
use crate::semiflow::Semiflow;
use crate::stability::FitConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum LogU {
    Nodes(Vec<(f64, f64)>),
    /// `a·t + b·t·sin(c·t)`.
    Oscillating {
        a: f64,
        b: f64,
        c: f64,
    },
    Log1p,
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InlineSystem {
    pub log_u: LogU,
    pub form: RatioForm,
    /// `translation` or `constant`.
    pub semiflow: String,
}

impl InlineSystem {
    pub fn build(&self) -> Result<GallerySystem> {
        let semiflow = match self.semiflow.as_str() {
            "translation" => Semiflow::Translation,
            "constant" => Semiflow::Constant,
            other => return Err(Error::InvalidParameter(format!("unknown semiflow `{other}`"))),
        };
        let mut system = match &self.log_u {
            LogU::Nodes(nodes) => {
                let pl = Arc::new(PiecewiseLinear::new(nodes.clone())?);
                let knots = pl.clone();
                gallery::ratio_system("inline", semiflow, Arc::new(move |t| pl.eval(t)), self.form)
                    .with_breakpoints(Arc::new(move |lo, hi| knots.knots_between(lo, hi)))
            }
            &LogU::Oscillating { a, b, c } => gallery::ratio_system(
                "inline",
                semiflow,
                Arc::new(move |t: f64| a * t + b * t * (c * t).sin()),
                self.form,
            )
            .with_max_panel(PI / (8.0 * c.abs().max(1.0))),
            LogU::Log1p => gallery::ratio_system("inline", semiflow, Arc::new(|t: f64| t.ln_1p()), self.form),
            &LogU::Constant(v) => gallery::ratio_system("inline", semiflow, Arc::new(move |_| v), self.form),
        };
        system = system.with_label("inline");
        Ok(GallerySystem {
            id: "inline".into(),
            system,
            expected_class: None,
            known_certificate: None,
            witness_family: None,
            notes: Vec::new(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SystemSpec {
    Gallery(String),
    Inline(InlineSystem),
}

impl SystemSpec {
    pub fn resolve(&self) -> Result<GallerySystem> {
        match self {
            SystemSpec::Gallery(id) => gallery::by_id(id),
            SystemSpec::Inline(i) => i.build(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Classify,
    Check(StabilityClass),
    Fit(StabilityClass),
    Datko,
    IntegralStability,
    Rolewicz,
    BvDatko,
    Barbashin,
    Proposition,
}

impl Task {
    pub fn parse(tag: &str) -> Option<Self> {
        if let Some(c) = tag.strip_prefix("check:") {
            return StabilityClass::parse(c).map(Task::Check);
        }
        if let Some(c) = tag.strip_prefix("fit:") {
            return StabilityClass::parse(c).map(Task::Fit);
        }
        Some(match tag {
            "classify" => Task::Classify,
            "datko" => Task::Datko,
            "integral" => Task::IntegralStability,
            "rolewicz" => Task::Rolewicz,
            "bv-datko" => Task::BvDatko,
            "barbashin" => Task::Barbashin,
            "proposition" => Task::Proposition,
            _ => return None,
        })
    }
}

impl Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::Classify => f.write_str("classify"),
            Task::Check(c) => write!(f, "check:{}", c.tag()),
            Task::Fit(c) => write!(f, "fit:{}", c.tag()),
            Task::Datko => f.write_str("datko"),
            Task::IntegralStability => f.write_str("integral"),
            Task::Rolewicz => f.write_str("rolewicz"),
            Task::BvDatko => f.write_str("bv-datko"),
            Task::Barbashin => f.write_str("barbashin"),
            Task::Proposition => f.write_str("proposition"),
        }
    }
}

/// Parameters shared by the certificate and integral tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskParams {
    pub log_n: f64,
    pub log_n_slope: f64,
    pub alpha: f64,
    pub beta: f64,
    pub omega: f64,
    pub d: f64,
    pub a: f64,
    pub b: f64,
    pub barbashin_b: f64,
    pub barbashin_points: usize,
    pub rolewicz: String,
    pub s_values: Vec<f64>,
}

impl Default for TaskParams {
    fn default() -> Self {
        Self {
            log_n: 0.0,
            log_n_slope: 0.0,
            alpha: 1.0,
            beta: 1.0,
            omega: 0.0,
            d: 1.0,
            a: 0.5,
            b: 1.0,
            barbashin_b: 0.5,
            barbashin_points: 30,
            rolewicz: "r".into(),
            s_values: vec![0.0, 1.0, 2.0, 5.0, 10.0, 20.0],
        }
    }
}

impl TaskParams {
    fn profile(&self) -> Profile {
        if self.log_n_slope == 0.0 {
            Profile::Constant(self.log_n)
        } else {
            Profile::Linear { intercept: self.log_n, slope: self.log_n_slope }
        }
    }

    /// Certificate of `class` assembled from the configured constants.
    pub fn certificate(&self, class: StabilityClass) -> Certificate {
        match class {
            StabilityClass::Ues => Certificate::Ues { log_n: self.log_n, alpha: self.alpha },
            StabilityClass::Bves => Certificate::Bves { log_n: self.log_n, alpha: self.alpha, beta: self.beta },
            StabilityClass::Es => Certificate::Es { log_n: self.profile(), alpha: self.alpha },
            StabilityClass::Stable => Certificate::Stable { log_n: self.profile() },
            StabilityClass::Growth => Certificate::Growth { log_m: self.profile(), omega: self.omega },
        }
    }

    pub fn rolewicz_function(&self) -> RolewiczFunction {
        RolewiczFunction::parse(&self.rolewicz).expect("validated at parse time")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OutputFormat {
    Json,
    Table,
    Plot,
}

impl OutputFormat {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "json" => Some(Self::Json),
            "table" => Some(Self::Table),
            "plot" => Some(Self::Plot),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::Json => "json",
            Self::Table => "table",
            Self::Plot => "plot",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub system: SystemSpec,
    pub tasks: Vec<Task>,
    pub grid: GridParams,
    pub quadrature: QuadratureConfig,
    pub fit: FitConfig,
    pub params: TaskParams,
    pub seed: u64,
    pub formats: Vec<OutputFormat>,
}

impl AnalysisConfig {
    pub fn new(system: SystemSpec) -> Self {
        Self {
            system,
            tasks: Vec::new(),
            grid: GridParams::default(),
            quadrature: QuadratureConfig::default(),
            fit: FitConfig::default(),
            params: TaskParams::default(),
            seed: 0,
            formats: vec![OutputFormat::Json, OutputFormat::Table, OutputFormat::Plot],
        }
    }

    /// All fields in config syntax, one per line.
    pub fn echo(&self) -> String {
        let mut o = String::new();
        let mut kv = |k: &str, v: &dyn Display| {
            let _ = writeln!(o, "{k}={v}");
        };
        match &self.system {
            SystemSpec::Gallery(id) => kv("system", id),
            SystemSpec::Inline(i) => {
                kv("system", &"inline");
                match &i.log_u {
                    LogU::Nodes(n) => {
                        kv("u.kind", &"nodes");
                        kv("u.nodes", &n.iter().map(|(t, v)| format!("{t}:{v}")).collect::<Vec<_>>().join(","));
                    }
                    LogU::Oscillating { a, b, c } => {
                        kv("u.kind", &"oscillating");
                        kv("u.a", a);
                        kv("u.b", b);
                        kv("u.c", c);
                    }
                    LogU::Log1p => kv("u.kind", &"log1p"),
                    LogU::Constant(v) => {
                        kv("u.kind", &"constant");
                        kv("u.value", v);
                    }
                }
                kv("u.form", &i.form.name());
                kv("u.semiflow", &i.semiflow);
            }
        }
        for t in &self.tasks {
            kv("task", t);
        }
        let g = &self.grid;
        kv("horizon", &g.horizon);
        kv("t_points", &g.t_points);
        kv("t_min", &g.t_min);
        kv("n_max", &g.n_max);
        if let Some(b) = g.band {
            kv("band", &b);
        }
        kv("x_count", &g.x_count);
        kv("x_max", &g.x_max);
        kv("v_random", &g.v_random);
        let q = &self.quadrature;
        kv("rel_tol", &q.rel_tol);
        kv("abs_tol", &q.abs_tol);
        kv("max_horizon", &q.max_horizon);
        if let Some(w) = q.max_panel {
            kv("max_panel", &w);
        }
        kv("max_panels", &q.max_panels);
        if let Some(r) = q.tail_rate {
            kv("tail_rate", &r);
        }
        let f = &self.fit;
        kv("log_n_cap", &f.log_n_cap);
        kv("alpha_min", &f.alpha_min);
        kv("alpha_max", &f.alpha_max);
        kv("beta_cap", &f.beta_cap);
        kv("omega_max", &f.omega_max);
        kv("fit_tol", &f.fit_tol);
        kv("check_tol", &f.check_tol);
        let p = &self.params;
        kv("logN", &p.log_n);
        kv("logN_slope", &p.log_n_slope);
        kv("alpha", &p.alpha);
        kv("beta", &p.beta);
        kv("omega", &p.omega);
        kv("d", &p.d);
        kv("a", &p.a);
        kv("b", &p.b);
        kv("barbashin_b", &p.barbashin_b);
        kv("barbashin_points", &p.barbashin_points);
        kv("F", &p.rolewicz);
        kv("s_values", &join(&p.s_values));
        kv("seed", &self.seed);
        kv("formats", &self.formats.iter().map(|f| f.name()).collect::<Vec<_>>().join(","));
        o
    }

    pub fn wants(&self, f: OutputFormat) -> bool {
        self.formats.contains(&f)
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

struct Entry {
    line: usize,
    value: String,
}

fn err(line: usize, field: &str, message: impl Into<String>) -> Error {
    Error::Config { line, field: field.into(), message: message.into() }
}

struct Fields {
    map: BTreeMap<String, Entry>,
}

impl Fields {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.map.remove(key)
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |e| e.line)
    }

    fn num<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.take(key) {
            None => Ok(default),
            Some(e) => e.value.parse().map_err(|_| err(e.line, key, format!("cannot parse `{}` as a number", e.value))),
        }
    }

    fn opt_num(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|_| err(e.line, key, format!("cannot parse `{}` as a number", e.value))),
        }
    }

    fn list(&mut self, key: &str, default: Vec<f64>) -> Result<Vec<f64>> {
        match self.take(key) {
            None => Ok(default),
            Some(e) => e
                .value
                .split(',')
                .map(|x| x.trim().parse().map_err(|_| err(e.line, key, format!("cannot parse `{x}` as a number"))))
                .collect(),
        }
    }
}

const KEYS: &[&str] = &[
    "system",
    "u.kind",
    "u.nodes",
    "u.a",
    "u.b",
    "u.c",
    "u.value",
    "u.form",
    "u.semiflow",
    "horizon",
    "t_points",
    "t_min",
    "n_max",
    "band",
    "x_count",
    "x_max",
    "v_random",
    "rel_tol",
    "abs_tol",
    "max_horizon",
    "max_panel",
    "max_panels",
    "tail_rate",
    "log_n_cap",
    "alpha_min",
    "alpha_max",
    "beta_cap",
    "omega_max",
    "fit_tol",
    "check_tol",
    "N",
    "logN",
    "logN_slope",
    "alpha",
    "beta",
    "omega",
    "d",
    "a",
    "b",
    "barbashin_b",
    "barbashin_points",
    "F",
    "s_values",
    "seed",
    "formats",
];

/// Parses the `key=value` format described in the module docs.
pub fn parse_config(text: &str) -> Result<AnalysisConfig> {
    let mut map = BTreeMap::new();
    let mut tasks = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        for tok in body.split_whitespace() {
            let Some((key, value)) = tok.split_once('=') else {
                return Err(err(line, tok, "expected key=value"));
            };
            if key == "task" {
                let t = Task::parse(value).ok_or_else(|| err(line, "task", format!("unknown task `{value}`")))?;
                tasks.push(t);
                continue;
            }
            if !KEYS.contains(&key) {
                return Err(err(line, key, "unknown key"));
            }
            if map.insert(key.to_string(), Entry { line, value: value.to_string() }).is_some() {
                return Err(err(line, key, "key given more than once"));
            }
        }
    }
    let mut f = Fields { map };
    let system = match f.take("system") {
        None => return Err(err(0, "system", "missing required key")),
        Some(e) if e.value == "inline" => SystemSpec::Inline(parse_inline(&mut f)?),
        Some(e) => {
            gallery::by_id(&e.value).map_err(|x| err(e.line, "system", x.to_string()))?;
            SystemSpec::Gallery(e.value)
        }
    };
    if !matches!(system, SystemSpec::Inline(_)) {
        if let Some(k) = f.map.keys().find(|k| k.starts_with("u.")) {
            return Err(err(f.line(k), k, "inline cocycle keys need system=inline"));
        }
    }

    let mut cfg = AnalysisConfig::new(system);
    cfg.tasks = tasks;

    let d = GridParams::default();
    let lines: BTreeMap<&str, usize> = KEYS.iter().map(|k| (*k, f.line(k))).collect();
    let ln = |k: &str| lines[k];
    cfg.grid = GridParams {
        horizon: f.num("horizon", d.horizon)?,
        t_points: f.num("t_points", d.t_points)?,
        t_min: f.num("t_min", d.t_min)?,
        n_max: f.num("n_max", d.n_max)?,
        band: f.opt_num("band")?,
        x_count: f.num("x_count", d.x_count)?,
        x_max: f.num("x_max", d.x_max)?,
        v_random: f.num("v_random", d.v_random)?,
    };
    let g = &cfg.grid;
    if !(g.horizon > 0.0 && g.horizon.is_finite()) {
        return Err(err(ln("horizon"), "horizon", "horizon > 0 required"));
    }
    if !(g.t_min > 0.0 && g.t_min < g.horizon) {
        return Err(err(ln("t_min"), "t_min", "0 < t_min < horizon required"));
    }
    if g.t_points < 2 {
        return Err(err(ln("t_points"), "t_points", "at least 2 grid times required"));
    }
    if g.band.is_some_and(|b| !(b > 0.0)) {
        return Err(err(ln("band"), "band", "band width > 0 required"));
    }
    if !(g.x_max > 0.0) {
        return Err(err(ln("x_max"), "x_max", "x_max > 0 required"));
    }

    let q = QuadratureConfig::default();
    cfg.quadrature = QuadratureConfig {
        rel_tol: f.num("rel_tol", q.rel_tol)?,
        abs_tol: f.num("abs_tol", q.abs_tol)?,
        max_horizon: f.num("max_horizon", q.max_horizon)?,
        max_panel: f.opt_num("max_panel")?,
        max_panels: f.num("max_panels", q.max_panels)?,
        tail_rate: f.opt_num("tail_rate")?,
    };
    if let Err(Error::InvalidParameter(m)) = cfg.quadrature.validate() {
        let field = ["rel_tol", "abs_tol", "max_horizon", "max_panels", "max_panel", "tail_rate"]
            .into_iter()
            .find(|k| m.contains(k))
            .unwrap_or("quadrature");
        return Err(err(ln(field), field, m));
    }

    let fd = FitConfig::default();
    cfg.fit = FitConfig {
        log_n_cap: f.num("log_n_cap", fd.log_n_cap)?,
        alpha_min: f.num("alpha_min", fd.alpha_min)?,
        alpha_max: f.num("alpha_max", fd.alpha_max)?,
        beta_cap: f.num("beta_cap", fd.beta_cap)?,
        omega_max: f.num("omega_max", fd.omega_max)?,
        fit_tol: f.num("fit_tol", fd.fit_tol)?,
        check_tol: f.num("check_tol", fd.check_tol)?,
        bisection_steps: fd.bisection_steps,
    };
    let fc = &cfg.fit;
    for (k, v) in
        [("log_n_cap", fc.log_n_cap), ("alpha_min", fc.alpha_min), ("fit_tol", fc.fit_tol), ("check_tol", fc.check_tol)]
    {
        if !(v > 0.0 && v.is_finite()) {
            return Err(err(ln(k), k, format!("{k} > 0 required")));
        }
    }
    if !(fc.alpha_max > fc.alpha_min) {
        return Err(err(ln("alpha_max"), "alpha_max", "alpha_max > alpha_min required"));
    }
    if !(fc.beta_cap >= fc.alpha_min) {
        return Err(err(ln("beta_cap"), "beta_cap", "beta_cap ≥ alpha_min required"));
    }
    if !(fc.omega_max >= 0.0) {
        return Err(err(ln("omega_max"), "omega_max", "omega_max ≥ 0 required"));
    }

    let pd = TaskParams::default();
    let log_n = match (f.take("N"), f.take("logN")) {
        (Some(_), Some(e)) => return Err(err(e.line, "logN", "give either N or logN, not both")),
        (Some(e), None) => {
            let n: f64 = e.value.parse().map_err(|_| err(e.line, "N", "cannot parse as a number"))?;
            if !(n >= 1.0 && n.is_finite()) {
                return Err(err(e.line, "N", "N ≥ 1 required by the certificate definitions"));
            }
            n.ln()
        }
        (None, Some(e)) => {
            let v: f64 = e.value.parse().map_err(|_| err(e.line, "logN", "cannot parse as a number"))?;
            if !(v >= 0.0 && v.is_finite()) {
                return Err(err(e.line, "logN", "log N ≥ 0 (N ≥ 1) required by the certificate definitions"));
            }
            v
        }
        (None, None) => pd.log_n,
    };
    cfg.params = TaskParams {
        log_n,
        log_n_slope: f.num("logN_slope", pd.log_n_slope)?,
        alpha: f.num("alpha", pd.alpha)?,
        beta: f.num("beta", pd.beta)?,
        omega: f.num("omega", pd.omega)?,
        d: f.num("d", pd.d)?,
        a: f.num("a", pd.a)?,
        b: f.num("b", pd.b)?,
        barbashin_b: f.num("barbashin_b", pd.barbashin_b)?,
        barbashin_points: f.num("barbashin_points", pd.barbashin_points)?,
        rolewicz: f.take("F").map_or(pd.rolewicz.clone(), |e| e.value),
        s_values: f.list("s_values", pd.s_values.clone())?,
    };
    let p = &cfg.params;
    if !(p.log_n_slope >= 0.0) {
        return Err(err(ln("logN_slope"), "logN_slope", "logN_slope ≥ 0 required so that N(s) ≥ 1"));
    }
    if !(p.alpha > 0.0) {
        return Err(err(ln("alpha"), "alpha", "α > 0 required (exponential decay rate)"));
    }
    if !(p.beta >= p.alpha) {
        return Err(err(ln("beta"), "beta", "β ≥ α required by the bounded-variation definition"));
    }
    if !(p.omega >= 0.0) {
        return Err(err(ln("omega"), "omega", "ω ≥ 0 required (growth rate)"));
    }
    if !(p.d > 0.0) {
        return Err(err(ln("d"), "d", "gap weight d > 0 required"));
    }
    if !(p.a > 0.0) {
        return Err(err(ln("a"), "a", "a > 0 required"));
    }
    if !(p.b >= p.a) {
        return Err(err(ln("b"), "b", "b ≥ a required"));
    }
    if !(p.barbashin_b > 0.0) {
        return Err(err(ln("barbashin_b"), "barbashin_b", "b > 0 required"));
    }
    if p.barbashin_points < 2 {
        return Err(err(ln("barbashin_points"), "barbashin_points", "at least 2 grid times required"));
    }
    match RolewiczFunction::parse(&p.rolewicz) {
        Some(func) => func.validate().map_err(|e| err(ln("F"), "F", e.to_string()))?,
        None => return Err(err(ln("F"), "F", format!("unknown function `{}` (use r, r^p, saturating)", p.rolewicz))),
    }
    if p.s_values.is_empty() || p.s_values.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
        return Err(err(ln("s_values"), "s_values", "s values must be finite and ≥ 0"));
    }

    cfg.seed = f.num("seed", 0)?;
    if let Some(e) = f.take("formats") {
        let mut out = Vec::new();
        for tag in e.value.split(',').filter(|t| !t.is_empty()) {
            let fmt =
                OutputFormat::parse(tag).ok_or_else(|| err(e.line, "formats", format!("unknown format `{tag}`")))?;
            if !out.contains(&fmt) {
                out.push(fmt);
            }
        }
        out.sort();
        cfg.formats = out;
    }
    debug_assert!(f.map.is_empty(), "unconsumed keys: {:?}", f.map.keys().collect::<Vec<_>>());
    Ok(cfg)
}

fn parse_inline(f: &mut Fields) -> Result<InlineSystem> {
    let kind = f.take("u.kind").map_or(("nodes".to_string(), 0), |e| (e.value, e.line));
    let log_u = match kind.0.as_str() {
        "nodes" => {
            let e = f.take("u.nodes").unwrap_or(Entry { line: 0, value: "0:0".into() });
            let mut nodes = Vec::new();
            for pair in e.value.split(',') {
                let (t, v) = pair
                    .split_once(':')
                    .ok_or_else(|| err(e.line, "u.nodes", format!("expected t:logu, got `{pair}`")))?;
                let t: f64 = t.parse().map_err(|_| err(e.line, "u.nodes", format!("bad abscissa `{t}`")))?;
                let v: f64 = v.parse().map_err(|_| err(e.line, "u.nodes", format!("bad value `{v}`")))?;
                nodes.push((t, v));
            }
            PiecewiseLinear::new(nodes.clone()).map_err(|x| err(e.line, "u.nodes", x.to_string()))?;
            LogU::Nodes(nodes)
        }
        "oscillating" => LogU::Oscillating { a: f.num("u.a", 0.0)?, b: f.num("u.b", 0.0)?, c: f.num("u.c", 1.0)? },
        "log1p" => LogU::Log1p,
        "constant" => LogU::Constant(f.num("u.value", 0.0)?),
        other => return Err(err(kind.1, "u.kind", format!("unknown inline kind `{other}`"))),
    };
    for k in ["u.nodes", "u.a", "u.b", "u.c", "u.value"] {
        if f.map.contains_key(k) {
            return Err(err(f.line(k), k, format!("not used by u.kind={}", kind.0)));
        }
    }
    let form = match f.take("u.form") {
        None => RatioForm::Plain,
        Some(e) => {
            RatioForm::parse(&e.value).ok_or_else(|| err(e.line, "u.form", format!("unknown form `{}`", e.value)))?
        }
    };
    let semiflow = match f.take("u.semiflow") {
        None => "translation".to_string(),
        Some(e) if e.value == "translation" || e.value == "constant" => e.value,
        Some(e) => return Err(err(e.line, "u.semiflow", format!("unknown semiflow `{}`", e.value))),
    };
    Ok(InlineSystem { log_u, form, semiflow })
}
