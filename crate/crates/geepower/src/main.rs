//! The `geepower` binary: evaluate scenario files from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use geepower_core::{DfChoice, Error, PreparedDesign, TrialSpec};
use geepower::report;
use geepower::scenario::Scenario;
use geepower::sweep::{self, SweepParam};

#[derive(Parser)]
#[command(
    name = "geepower",
    version,
    about = "Analytical GEE power for multi-period cluster randomized trials"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one scenario and print its power table.
    Run {
        /// Scenario file.
        file: PathBuf,
        /// Read the file as JSON instead of the plain text format.
        #[arg(long)]
        json: bool,
        /// Degrees-of-freedom rule: 1 = clusters - parameters, 2 = clusters - 2.
        /// Overrides the scenario's df_choice.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        df: Option<u8>,
    },
    /// Evaluate a scenario over a grid of one parameter and write CSV.
    Sweep {
        /// Scenario file providing every non-swept value.
        file: PathBuf,
        /// Read the file as JSON instead of the plain text format.
        #[arg(long)]
        json: bool,
        /// Which parameter the grid varies.
        #[arg(long)]
        param: SweepParam,
        /// Grid values, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        values: Vec<f64>,
        /// Where to write the CSV.
        #[arg(long)]
        out: PathBuf,
        /// Also print a terminal power curve.
        #[arg(long)]
        summary: bool,
    },
    /// Show how a scenario expands: sequence timing, exposures, covariance.
    Explain {
        /// Scenario file.
        file: PathBuf,
        /// Read the file as JSON instead of the plain text format.
        #[arg(long)]
        json: bool,
    },
}

/// Exit status 1: anything that stopped us before or beside the model
/// validator (I/O, file syntax, numerical failure).
fn fail(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(1)
}

/// Exit status 2: the scenario parsed but describes an inconsistent trial.
fn fail_validation(report: &geepower_core::ValidationReport) -> ExitCode {
    eprintln!("scenario failed validation:");
    eprint!("{report}");
    ExitCode::from(2)
}

fn load_spec(path: &Path, json: bool) -> Result<TrialSpec, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let spec = Scenario::from_str(&text, json)
        .and_then(Scenario::build)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(spec)
}

/// Worker thread cap for sweeps: `GEEPOWER_THREADS` if set and sensible,
/// otherwise the machine's available parallelism.
fn sweep_threads() -> usize {
    let fallback = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    match std::env::var("GEEPOWER_THREADS") {
        Err(_) => fallback,
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => n,
            _ => {
                eprintln!(
                    "warning: ignoring GEEPOWER_THREADS={raw:?}; expected a positive integer"
                );
                fallback
            }
        },
    }
}

fn run(file: &Path, json: bool, df: Option<u8>) -> ExitCode {
    let mut spec = match load_spec(file, json) {
        Ok(spec) => spec,
        Err(message) => return fail(message),
    };
    if let Some(choice) = df {
        spec.df_choice =
            if choice == 1 { DfChoice::ClustersMinusParams } else { DfChoice::ClustersMinusTwo };
    }
    match geepower_core::evaluate(&spec) {
        Ok(result) => {
            print!("{}", report::run_report(&spec, &result));
            ExitCode::SUCCESS
        }
        Err(Error::Invalid(report)) => fail_validation(&report),
        Err(other) => fail(other),
    }
}

fn run_sweep(
    file: &Path,
    json: bool,
    param: SweepParam,
    values: &[f64],
    out: &Path,
    summary: bool,
) -> ExitCode {
    let spec = match load_spec(file, json) {
        Ok(spec) => spec,
        Err(message) => return fail(message),
    };
    let report = geepower_core::validate(&spec);
    if !report.is_empty() {
        return fail_validation(&report);
    }

    let points = sweep::run_sweep(&spec, param, values, sweep_threads());
    for point in &points {
        if let Err(message) = &point.outcome {
            eprintln!("warning: {param} = {}: {message}", point.value);
        }
    }
    if let Err(e) = std::fs::write(out, sweep::csv(param, &points)) {
        return fail(format!("cannot write {}: {e}", out.display()));
    }
    println!("wrote {} rows to {}", points.len(), out.display());
    if summary {
        print!("{}", sweep::curve(param, &points));
    }
    ExitCode::SUCCESS
}

fn explain(file: &Path, json: bool) -> ExitCode {
    let spec = match load_spec(file, json) {
        Ok(spec) => spec,
        Err(message) => return fail(message),
    };
    let report = geepower_core::validate(&spec);
    if !report.is_empty() {
        return fail_validation(&report);
    }
    let outcome = PreparedDesign::new(&spec).and_then(|prepared| {
        let covariance = prepared.covariance(&spec)?;
        let result = prepared.evaluate(&spec)?;
        Ok(report::explain_report(&spec, &prepared, &covariance, &result))
    });
    match outcome {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

fn main() -> ExitCode {
    // Usage problems are user-input errors (status 1); status 2 is
    // reserved for scenarios the model validator rejects.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.exit_code() == 0 => {
            // --help and --version print to stdout and succeed.
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match cli.command {
        Command::Run { file, json, df } => run(&file, json, df),
        Command::Sweep { file, json, param, values, out, summary } => {
            run_sweep(&file, json, param, &values, &out, summary)
        }
        Command::Explain { file, json } => explain(&file, json),
    }
}
