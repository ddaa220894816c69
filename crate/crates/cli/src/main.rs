//! `gef-lab`: run experiments from a TOML config and write CSV outputs.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure (completed
//! outputs are written with a `_partial` suffix).

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::{ConfigFile, RunConfig};
use crate::error::CliError;
use crate::output::Outputs;

#[derive(Parser)]
#[command(name = "gef-lab", version, about = "Argument increments of the Gaussian entire function")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for CSV outputs and the run manifest.
    #[arg(long)]
    output_dir: PathBuf,
    /// Overrides `experiment.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; outputs do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Coefficients of the field sample of every replicate.
    Sample(RunArgs),
    /// Increments per replicate, chain and R.
    Increment(RunArgs),
    /// Expected increment per chain and R.
    Mean(RunArgs),
    /// Signed length of chain pairs.
    SignedLength(RunArgs),
    /// Finite-R covariance by quadrature for chain pairs.
    CovQuad(RunArgs),
    /// Monte Carlo variance against quadrature and the asymptotic law.
    VarianceSweep(RunArgs),
    /// Normality diagnostics of the standardised increments.
    Clt(RunArgs),
    /// Scalar Gaussian identities behind the chaos expansion.
    WickCheck(RunArgs),
    /// Diagram sums against Monte Carlo Wick-power moments.
    DiagramCheck(RunArgs),
    /// Winding numbers against polynomial root counts.
    ZerosCheck(RunArgs),
}

type Runner = fn(&RunConfig, &mut Outputs) -> Result<(), CliError>;

impl Command {
    fn parts(&self) -> (&'static str, &RunArgs, Runner) {
        match self {
            Command::Sample(a) => ("sample", a, commands::sample),
            Command::Increment(a) => ("increment", a, commands::increment),
            Command::Mean(a) => ("mean", a, commands::mean),
            Command::SignedLength(a) => ("signed-length", a, commands::signed_length_cmd),
            Command::CovQuad(a) => ("cov-quad", a, commands::cov_quad),
            Command::VarianceSweep(a) => ("variance-sweep", a, commands::variance_sweep),
            Command::Clt(a) => ("clt", a, commands::clt),
            Command::WickCheck(a) => ("wick-check", a, commands::wick_check),
            Command::DiagramCheck(a) => ("diagram-check", a, commands::diagram_check),
            Command::ZerosCheck(a) => ("zeros-check", a, commands::zeros_check),
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    subcommand: &'a str,
    seed: u64,
    status: &'a str,
    outputs: Vec<String>,
    config: &'a ConfigFile,
}

fn write_manifest(dir: &Path, m: &Manifest) -> Result<(), CliError> {
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(m).expect("manifest serialises");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::Output {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

fn run(name: &str, args: &RunArgs, runner: Runner) -> Result<(), CliError> {
    let cfg = RunConfig::load(&args.config, args.seed)?;
    std::fs::create_dir_all(&args.output_dir)
        .map_err(|e| CliError::validation("--output-dir", format!("{}: {e}", args.output_dir.display())))?;
    let mut outputs = Outputs::default();
    let result = match args.threads {
        Some(0) => return Err(CliError::validation("--threads", "must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::validation("--threads", e.to_string()))?
            .install(|| runner(&cfg, &mut outputs)),
        None => runner(&cfg, &mut outputs),
    };
    let numerical = matches!(&result, Err(e) if e.is_numerical());
    if result.is_ok() || numerical {
        let files = outputs.write(&args.output_dir, numerical)?;
        write_manifest(
            &args.output_dir,
            &Manifest {
                tool: "gef-lab",
                version: env!("CARGO_PKG_VERSION"),
                core_version: gef_core::VERSION,
                subcommand: name,
                seed: cfg.seed(),
                status: if numerical { "numerical-failure" } else { "ok" },
                outputs: files,
                config: &cfg.file,
            },
        )?;
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args, runner) = cli.command.parts();
    match run(name, args, runner) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let prefix = if e.is_numerical() { format!("{name}: ") } else { String::new() };
            eprintln!("error: {prefix}{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
