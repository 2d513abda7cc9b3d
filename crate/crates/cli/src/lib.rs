//! Command-line front end: `pdimtune <command> --config <file> --out <dir>`.
//!
//! Exit status is 0 on success, 2 when the config does not match the schema
//! (with one diagnostic per offending field on stderr) and 1 when the run
//! itself fails.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

pub mod config;
pub mod run;

pub use config::{parse_config, Command, Diagnostic, RunConfig};
pub use run::{emit_report, execute, Report};

#[derive(Debug, Parser)]
#[command(name = "pdimtune", version, about = "Hyperparameter-tuning complexity bounds, solvers and experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Evaluate a pseudo-dimension or sample-complexity formula.
    Bounds(RunArgs),
    /// Solve one regularized problem instance.
    Solve(RunArgs),
    /// Tune hyperparameters by grid ERM on sampled instances.
    Tune(RunArgs),
    /// Monte Carlo generalization gap against the number of instances.
    Gapcurve(RunArgs),
    /// Estimate the largest shattered set of instances.
    Shatter(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Cmd {
    fn split(&self) -> (Command, &RunArgs) {
        match self {
            Cmd::Bounds(a) => (Command::Bounds, a),
            Cmd::Solve(a) => (Command::Solve, a),
            Cmd::Tune(a) => (Command::Tune, a),
            Cmd::Gapcurve(a) => (Command::Gapcurve, a),
            Cmd::Shatter(a) => (Command::Shatter, a),
        }
    }
}

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;

fn schema_error(diags: &[Diagnostic]) -> i32 {
    for d in diags {
        eprintln!("config error: {}: {}", d.field, d.message);
    }
    eprintln!("{}", json!({ "status": "schema_error", "diagnostics": diags }));
    EXIT_SCHEMA
}

fn runtime_error(err: &anyhow::Error) -> i32 {
    eprintln!("error: {err:#}");
    eprintln!("{}", json!({ "status": "runtime_error", "message": format!("{err:#}") }));
    EXIT_RUNTIME
}

/// Runs one parsed invocation and returns the process exit status.
pub fn run(cli: &Cli) -> i32 {
    let (command, args) = cli.command.split();
    let text = match fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            return runtime_error(&anyhow::anyhow!("reading config {}: {e}", args.config.display()));
        }
    };
    let base = args.config.parent().unwrap_or(Path::new("."));
    let cfg = match parse_config(&text, command, base) {
        Ok(c) => c,
        Err(diags) => return schema_error(&diags),
    };
    let Some(out) = args.out.clone().or_else(|| cfg.out.clone()) else {
        return schema_error(&[Diagnostic::new("out", "no output directory: pass --out or set `out`")]);
    };

    let outcome = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(anyhow::Error::from)
            .and_then(|pool| pool.install(|| execute(&cfg))),
        None => execute(&cfg),
    };
    match outcome.and_then(|report| emit_report(&cfg, &report, &out)) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => runtime_error(&e),
    }
}
