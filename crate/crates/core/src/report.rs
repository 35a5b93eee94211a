//! Task orchestration and report output.
//!
//! The structured report contains no timing data; timings go to a separate
//! record so that two runs of the same config compare byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::certificate::{Certificate, StabilityClass};
use crate::config::{AnalysisConfig, OutputFormat, Task};
use crate::error::Result;
use crate::gallery::{ExpectedClass, GallerySystem};
use crate::grid::{GainTable, PairRule, SampleGrid};
use crate::integral::{self, BarbashinCheck, BvDatkoCheck, ProfileCheck, PropositionReport};
use crate::stability::{self, CheckOutcome, FitReport, LatticeVerdict};

#[derive(Debug, Clone, Serialize)]
pub struct SystemSummary {
    pub id: String,
    pub label: String,
    pub dim: usize,
    pub expected_class: Option<ExpectedClass>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSummary {
    pub t_values: usize,
    pub pairs: usize,
    pub horizon: f64,
    pub x_samples: usize,
    pub v_samples: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TaskResult {
    Classify {
        verdict: LatticeVerdict,
        /// `(t - s, max log gain)` over the grid.
        #[serde(skip)]
        envelope: Vec<(f64, f64)>,
    },
    Check {
        certificate: Certificate,
        outcome: CheckOutcome,
    },
    Fit {
        report: FitReport,
    },
    Profile {
        check: ProfileCheck,
    },
    BvDatko {
        check: BvDatkoCheck,
    },
    Barbashin {
        check: BarbashinCheck,
    },
    Proposition {
        report: PropositionReport,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskRecord {
    pub task: String,
    pub status: TaskStatus,
    pub error: Option<String>,
    pub result: Option<TaskResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    /// Full config in its own syntax, defaults included.
    pub config: String,
    pub seed: u64,
    pub system: SystemSummary,
    pub grid: GridSummary,
    pub tasks: Vec<TaskRecord>,
}

impl RunReport {
    pub fn all_completed(&self) -> bool {
        self.tasks.iter().all(|t| t.status == TaskStatus::Completed)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub total_ms: f64,
    pub tasks: Vec<(String, f64)>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub timing: Timing,
}

struct Context<'a> {
    cfg: &'a AnalysisConfig,
    system: &'a GallerySystem,
    grid: &'a SampleGrid,
    table: &'a GainTable,
}

fn envelope(table: &GainTable) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = table.points().iter().map(|p| (p.t - p.s, p.gain)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    pts.dedup_by(|later, first| later.0 == first.0);
    pts
}

fn run_task(task: Task, cx: &Context) -> Result<TaskResult> {
    let Context { cfg, system, grid, table } = *cx;
    let sys = &system.system;
    let p = &cfg.params;
    let (xs, vs) = (grid.x_samples(), grid.v_samples());
    Ok(match task {
        Task::Classify => {
            TaskResult::Classify { verdict: stability::classify_table(table, &cfg.fit)?, envelope: envelope(table) }
        }
        Task::Check(class) => {
            let certificate = p.certificate(class);
            let outcome = stability::check_on_table(table, &certificate, cfg.fit.check_tol)?;
            TaskResult::Check { certificate, outcome }
        }
        Task::Fit(class) => TaskResult::Fit { report: stability::fit_class(table, class, &cfg.fit) },
        Task::Datko => {
            TaskResult::Profile { check: integral::datko_check(sys, p.d, &p.s_values, xs, vs, &cfg.quadrature)? }
        }
        Task::IntegralStability => TaskResult::Profile {
            check: integral::integral_stability_check(sys, &p.s_values, xs, vs, &cfg.quadrature)?,
        },
        Task::Rolewicz => TaskResult::Profile {
            check: integral::rolewicz_check(sys, &p.rolewicz_function(), p.d, &p.s_values, xs, vs, &cfg.quadrature)?,
        },
        Task::BvDatko => TaskResult::BvDatko {
            check: integral::bv_datko_check(sys, p.a, p.b, &p.s_values, xs, vs, cfg.fit.log_n_cap, &cfg.quadrature)?,
        },
        Task::Barbashin => {
            let times = SampleGrid::log_times(cfg.grid.horizon, p.barbashin_points, cfg.grid.t_min);
            let bgrid = SampleGrid::new(times, PairRule::Full, xs.to_vec(), vs.to_vec())?;
            TaskResult::Barbashin {
                check: integral::barbashin_check(sys, p.barbashin_b, &bgrid, &cfg.quadrature, &cfg.fit)?,
            }
        }
        Task::Proposition => {
            TaskResult::Proposition { report: integral::proposition_crosscheck(sys, grid, &cfg.quadrature, &cfg.fit)? }
        }
    })
}

/// Executes the configured tasks in order (or concurrently with `parallel`;
/// the report is assembled in task order either way).
pub fn run(cfg: &AnalysisConfig, parallel: bool) -> Result<RunOutput> {
    let start = Instant::now();
    let system = cfg.system.resolve()?;
    let grid = SampleGrid::for_gallery(&system, &cfg.grid, cfg.seed)?;
    let table = GainTable::build(&system.system, &grid)?;
    let cx = Context { cfg, system: &system, grid: &grid, table: &table };
    let exec = |task: &Task| {
        let t0 = Instant::now();
        let res = run_task(*task, &cx);
        let ms = t0.elapsed().as_secs_f64() * 1e3;
        let record = match res {
            Ok(r) => TaskRecord { task: task.to_string(), status: TaskStatus::Completed, error: None, result: Some(r) },
            Err(e) => TaskRecord {
                task: task.to_string(),
                status: TaskStatus::Failed,
                error: Some(e.to_string()),
                result: None,
            },
        };
        (record, (task.to_string(), ms))
    };
    let done: Vec<(TaskRecord, (String, f64))> =
        if parallel { cfg.tasks.par_iter().map(exec).collect() } else { cfg.tasks.iter().map(exec).collect() };
    let (tasks, times): (Vec<_>, Vec<_>) = done.into_iter().unzip();
    let pairs = grid.pairs().len();
    let report = RunReport {
        tool: "analyze".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.echo(),
        seed: cfg.seed,
        system: SystemSummary {
            id: system.id.clone(),
            label: system.system.label().to_string(),
            dim: system.system.dim(),
            expected_class: system.expected_class,
            notes: system.notes.clone(),
        },
        grid: GridSummary {
            t_values: grid.t_values().len(),
            pairs,
            horizon: grid.horizon(),
            x_samples: grid.x_samples().len(),
            v_samples: grid.v_samples().len(),
        },
        tasks,
    };
    Ok(RunOutput { report, timing: Timing { total_ms: start.elapsed().as_secs_f64() * 1e3, tasks: times } })
}

pub fn report_json(report: &RunReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes") + "\n"
}

fn class_name(c: Option<StabilityClass>) -> &'static str {
    c.map_or("none", StabilityClass::tag)
}

/// Human-readable summary table.
pub fn render_table(report: &RunReport) -> String {
    let mut o = String::new();
    let _ = writeln!(
        o,
        "system {} ({}), grid: {} pairs up to t = {}",
        report.system.id, report.system.label, report.grid.pairs, report.grid.horizon
    );
    for (i, rec) in report.tasks.iter().enumerate() {
        let _ = write!(o, "[{}] {:<16} ", i + 1, rec.task);
        let Some(res) = &rec.result else {
            let _ = writeln!(o, "FAILED: {}", rec.error.as_deref().unwrap_or(""));
            continue;
        };
        match res {
            TaskResult::Classify { verdict, .. } => {
                let _ = writeln!(o, "strongest class: {}", class_name(verdict.strongest_class));
                for class in StabilityClass::CHAIN {
                    let line = if verdict.certificates.contains_key(&class) {
                        "certified on grid".to_string()
                    } else if let Some(r) = verdict.refutations.get(&class) {
                        let w = &r.witness;
                        format!("refuted by witness t = {}, s = {}, margin = {}", w.t, w.s, w.margin)
                    } else {
                        format!("inconclusive ({})", verdict.inconclusive.get(&class).map_or("", |s| s.as_str()))
                    };
                    let _ = writeln!(o, "      {:<4} {line}", class.tag());
                }
            }
            TaskResult::Check { outcome, .. } => match outcome {
                CheckOutcome::Pass { worst_margin, points } => {
                    let _ = writeln!(o, "pass on {points} points (worst margin {worst_margin})");
                }
                CheckOutcome::Fail { witness: w } => {
                    let _ = writeln!(o, "witness t = {}, s = {}, margin = {}", w.t, w.s, w.margin);
                }
            },
            TaskResult::Fit { report } => match &report.certificate {
                Some(c) => {
                    let _ = writeln!(o, "fitted {c:?}");
                }
                None => {
                    let _ = writeln!(o, "infeasible: {}", report.reason.as_deref().unwrap_or(""));
                }
            },
            TaskResult::Profile { check } => {
                let _ =
                    writeln!(o, "{} converged: {}, bounded: {}", check.functional, check.converged(), check.bounded);
                for p in &check.points {
                    let _ = writeln!(
                        o,
                        "      s = {:<10} value = {:<24} log = {:<24} converged = {}",
                        p.s, p.value, p.log_value, p.converged
                    );
                }
            }
            TaskResult::BvDatko { check } => {
                let _ = writeln!(
                    o,
                    "a = {}, b = {}: N̂ = {} (log {}), pass: {}",
                    check.a, check.b, check.n_hat, check.log_n_hat, check.pass
                );
            }
            TaskResult::Barbashin { check } => {
                let sup = check.profile.iter().map(|p| p.value).fold(0.0, f64::max);
                let _ = writeln!(
                    o,
                    "b = {}: sup B̂ = {sup}, bounded: {}, direct class: {}, consistent: {}",
                    check.b,
                    check.bounded,
                    class_name(check.confirmed_class),
                    check.consistent
                );
            }
            TaskResult::Proposition { report } => {
                if report.applicable {
                    let _ = writeln!(o, "construction applied, stability check passed: {}", report.passed());
                } else {
                    let _ = writeln!(o, "not applicable: {}", report.reason.as_deref().unwrap_or(""));
                }
            }
        }
    }
    o
}

fn series(pts: impl IntoIterator<Item = (f64, f64)>) -> String {
    pts.into_iter().map(|(x, y)| format!("{x} {y}\n")).collect()
}

/// Two-column plot series keyed by file name.
pub fn plot_series(report: &RunReport) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (i, rec) in report.tasks.iter().enumerate() {
        let name = |what: &str| format!("{:02}-{}.dat", i + 1, what);
        match &rec.result {
            Some(TaskResult::Classify { envelope, .. }) => {
                out.push((name("envelope"), series(envelope.iter().copied())))
            }
            Some(TaskResult::Profile { check }) => {
                let tag = rec.task.replace(':', "-");
                out.push((name(&tag), series(check.points.iter().map(|p| (p.s, p.value)))));
            }
            Some(TaskResult::BvDatko { check }) => {
                out.push((name("bv-datko"), series(check.points.iter().map(|p| (p.s, p.value)))));
            }
            Some(TaskResult::Barbashin { check }) => {
                out.push((name("barbashin"), series(check.profile.iter().map(|p| (p.t, p.value)))));
            }
            _ => {}
        }
    }
    out
}

/// Writes the requested formats into `dir`; returns the files written.
pub fn emit(out: &RunOutput, formats: &[OutputFormat], dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: &str| -> io::Result<()> {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    if formats.contains(&OutputFormat::Json) {
        put("report.json", &report_json(&out.report))?;
        put("timing.json", &(serde_json::to_string_pretty(&out.timing).expect("timing serializes") + "\n"))?;
    }
    if formats.contains(&OutputFormat::Table) {
        put("report.txt", &render_table(&out.report))?;
    }
    if formats.contains(&OutputFormat::Plot) {
        for (name, body) in plot_series(&out.report) {
            put(&name, &body)?;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn empty_task_list_echoes_config() {
        let cfg = parse_config("system=pure-decay:2 t_points=20").unwrap();
        let out = run(&cfg, false).unwrap();
        assert!(out.report.tasks.is_empty());
        assert!(out.report.all_completed());
        assert!(report_json(&out.report).contains("system=pure-decay:2"));
    }

    #[test]
    fn datko_profile_is_one() {
        let cfg = parse_config("system=pure-decay:2 task=datko d=1 t_points=20").unwrap();
        let out = run(&cfg, false).unwrap();
        let Some(TaskResult::Profile { check }) = &out.report.tasks[0].result else { panic!() };
        assert!(check.points.iter().all(|p| (p.value - 1.0).abs() < 1e-8));
        let plots = plot_series(&out.report);
        assert_eq!(plots[0].0, "01-datko.dat");
        assert_eq!(plots[0].1.lines().count(), 6);
    }

    #[test]
    fn check_task_reports_witness() {
        let cfg =
            parse_config("system=spike task=check:BVES N=1 alpha=1 beta=2 horizon=20 n_max=10 t_points=30").unwrap();
        let out = run(&cfg, false).unwrap();
        let Some(TaskResult::Check { outcome, .. }) = &out.report.tasks[0].result else { panic!() };
        assert!(outcome.witness().is_some());
        assert!(render_table(&out.report).contains("witness"));
    }

    #[test]
    fn parallel_matches_sequential() {
        let cfg = parse_config("system=exp-sin task=fit:BVES task=datko d=0.25 task=check:UES t_points=30 horizon=50")
            .unwrap();
        let a = run(&cfg, false).unwrap();
        let b = run(&cfg, true).unwrap();
        assert_eq!(report_json(&a.report), report_json(&b.report));
    }
}
