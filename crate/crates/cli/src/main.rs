//! `cusplab`: numerical experiments on weighted divergence and Korn problems in cusp domains.

mod commands;
mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) | CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    /// Solve div u = f and report weighted norms.
    Divsolve,
    /// Weighted Hardy inequality on random bumps.
    Hardy,
    /// Discrete inf-sup constants on refined meshes.
    Infsup,
    /// Discrete Korn constants on refined meshes.
    Korn,
    /// Closed-form checks of the counterexample pressure.
    Counterexample,
    /// Muckenhoupt classification of distance powers.
    Apcheck,
    /// Norm ratios across the admissible weight interval.
    ScanBeta,
    /// Lifted-measure integral identity.
    LiftCheck,
}

#[derive(Debug, Parser)]
#[command(name = "cusplab", version, about)]
struct Cli {
    command: Command,
    /// TOML configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set domain.gamma=1.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads; all available cores when absent.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let cfg = config::load(cli.config.as_deref(), &cli.overrides)?;
    cfg.validate()?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let name = cli.command.to_possible_value().expect("no skipped variants").get_name().to_string();
    let outcome = match cli.command {
        Command::Divsolve => commands::divsolve(&cfg),
        Command::Hardy => commands::hardy(&cfg),
        Command::Infsup => commands::infsup(&cfg),
        Command::Korn => commands::korn(&cfg),
        Command::Counterexample => commands::counterexample(&cfg),
        Command::Apcheck => commands::apcheck(&cfg),
        Command::ScanBeta => commands::scan_beta(&cfg),
        Command::LiftCheck => commands::lift_check(&cfg),
    }?;
    let report = report::build(&name, &outcome.results, &outcome.checks, &cfg);
    let (json, csv) = report::write(Path::new(&cfg.output.dir), &name, &report, &outcome.table)?;
    for c in &outcome.checks {
        println!("{}", c.line());
    }
    println!("wrote {} and {}", json.display(), csv.display());
    if report::has_non_finite(&report) {
        return Err(CliError::Numerical("report contains non-finite values".into()));
    }
    Ok(outcome.checks.iter().all(|c| c.pass))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("cusplab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
