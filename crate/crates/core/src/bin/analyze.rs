use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use skewflow::config::parse_config;
use skewflow::report::{emit, run};

/// Runs the analysis tasks described in a config file.
#[derive(Parser)]
#[command(name = "analyze", version)]
struct Args {
    /// Config file in key=value format.
    config: PathBuf,
    /// Overrides the seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "analysis-out")]
    out: PathBuf,
    /// Run tasks concurrently.
    #[arg(long)]
    parallel: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = match run(&cfg, args.parallel) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    if let Err(e) = emit(&out, &cfg.formats, &args.out) {
        eprintln!("error: writing output to {}: {e}", args.out.display());
        return ExitCode::from(3);
    }
    for rec in out.report.tasks.iter().filter(|r| r.error.is_some()) {
        eprintln!("task {} failed: {}", rec.task, rec.error.as_deref().unwrap_or(""));
    }
    if out.report.all_completed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}
