//! `fredstab` command-line driver.
//!
//! Exit codes: 0 success, 1 input, 2 assumption failure, 3 solver failure,
//! 4 integrator guard, 5 verification mismatch. Errors go to stderr as JSON.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fredstab::canonical::to_canonical_string;
use fredstab::Error;
use serde::Serialize;

use commands::{resolve_out, Artifacts, CliError, CliResult};
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "fredstab",
    version,
    about = "Spectral rapid stabilization: synthesize, verify, simulate, sweep, report"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select the shift, solve the gains, certify the transform.
    Synthesize(Common),
    /// Recompute every certified quantity from stored artifacts.
    Verify(Common),
    /// Run the configured scenarios against the stored feedback.
    Simulate(Common),
    /// Run the pipeline over the configured grid in parallel.
    Sweep(Common),
    /// Regenerate report.json, tables and plots from artifacts.
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for sweeps (default: logical cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Artifact directory; overrides OUTPUT_DIR and the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SweepSummary {
    command: &'static str,
    out: String,
    points: usize,
    failed: usize,
}

#[derive(Serialize)]
struct ReportSummary {
    command: &'static str,
    out: String,
    absent: Vec<String>,
}

fn load(c: &Common, required: bool) -> CliResult<Option<RunConfig>> {
    match &c.config {
        Some(p) => Ok(Some(RunConfig::load(p)?)),
        None if required => Err(Error::InvalidInput("--config is required for this command".into()).into()),
        None => Ok(None),
    }
}

fn emit<S: Serialize>(value: &S) -> CliResult<()> {
    println!("{}", to_canonical_string(value)?);
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Synthesize(c) => {
            let cfg = load(&c, true)?.expect("required");
            let art = Artifacts::new(resolve_out(c.out.as_deref(), Some(&cfg)));
            emit(&commands::cmd_synthesize(&cfg, &art)?)
        }
        Command::Verify(c) => {
            let cfg = load(&c, false)?;
            let art = Artifacts::new(resolve_out(c.out.as_deref(), cfg.as_ref()));
            emit(&commands::cmd_verify(cfg.as_ref(), &art)?)
        }
        Command::Simulate(c) => {
            let cfg = load(&c, true)?.expect("required");
            let art = Artifacts::new(resolve_out(c.out.as_deref(), Some(&cfg)));
            emit(&commands::cmd_simulate(&cfg, &art)?)
        }
        Command::Sweep(c) => {
            let cfg = load(&c, true)?.expect("required");
            let art = Artifacts::new(resolve_out(c.out.as_deref(), Some(&cfg)));
            let rows = sweep::run_sweep(&cfg, &art, c.jobs)?;
            emit(&SweepSummary {
                command: "sweep",
                out: art.dir.display().to_string(),
                points: rows.len(),
                failed: rows.iter().filter(|r| r.exit_code != 0).count(),
            })
        }
        Command::Report(c) => {
            let cfg = load(&c, false)?;
            let art = Artifacts::new(resolve_out(c.out.as_deref(), cfg.as_ref()));
            let report = commands::cmd_report(cfg.as_ref(), &art)?;
            emit(&ReportSummary { command: "report", out: art.dir.display().to_string(), absent: report.absent })
        }
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            // clap's own exit code (2) would collide with the assumption code
            return fail(&CliError::Core(Error::InvalidInput(e.to_string().trim().to_string())));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
