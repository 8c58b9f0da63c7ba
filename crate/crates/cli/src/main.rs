//! Command-line driver: `delaywave <command> [-c config.json] [--set k=v]... [--out DIR]`.
//!
//! Exit codes: 0 all checks pass, 1 usage or configuration error, 2 a
//! scientific check failed, 3 numerical failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;
mod suite;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentConfig, Scenario};
use crate::error::Result;
use crate::output::OutDir;

#[derive(Parser)]
#[command(name = "delaywave", version, about = "Travelling waves of the delayed bistable equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; omitted sections take their defaults.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Dotted override applied to the config, e.g. `solver.n=4001`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (default `out/<command>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// More log output; repeat for debug.
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Check the bistable (and oscillatory) assumptions on the model.
    Verify(Common),
    /// Solve for a travelling wave and diagnose it.
    SolveWave(Common),
    /// Run the delayed equation from an initial datum.
    Simulate(Common),
    /// Root counts of the characteristic equation over a parameter grid.
    CharScan(Common),
    /// Run a named scenario end to end and check its criteria.
    TheoremSuite {
        /// Scenario; overrides `suite.scenario`.
        scenario: Option<Scenario>,
        #[command(flatten)]
        common: Common,
    },
}

fn prepare(name: &str, common: &Common, scenario: Option<Scenario>) -> Result<(ExperimentConfig, OutDir)> {
    let mut cfg = config::load(common.config.as_deref(), &common.set)?;
    if let Some(s) = scenario {
        cfg.suite.scenario = s;
    }
    if name == "theorem-suite" {
        cfg = suite::resolve(cfg);
    }
    let dir = common.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out").join(name));
    cfg.out = Some(dir.clone());
    let out = OutDir::create(&dir, name, &cfg)?;
    Ok((cfg, out))
}

fn execute(cli: Cli) -> Result<bool> {
    let (name, common, scenario) = match &cli.command {
        Command::Verify(c) => ("verify", c, None),
        Command::SolveWave(c) => ("solve-wave", c, None),
        Command::Simulate(c) => ("simulate", c, None),
        Command::CharScan(c) => ("char-scan", c, None),
        Command::TheoremSuite { scenario, common } => ("theorem-suite", common, *scenario),
    };
    let level = match common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let (cfg, out) = prepare(name, common, scenario)?;
    match cli.command {
        Command::Verify(_) => commands::verify(&cfg, &out),
        Command::SolveWave(_) => commands::solve_wave_cmd(&cfg, &out),
        Command::Simulate(_) => commands::simulate(&cfg, &out),
        Command::CharScan(_) => commands::char_scan(&cfg, &out),
        Command::TheoremSuite { .. } => suite::run(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
