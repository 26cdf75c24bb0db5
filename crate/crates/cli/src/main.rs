mod commands;
mod config;
mod error;
mod output;

use clap::{Parser, Subcommand};
use config::{Overrides, RunConfig};
use error::CliError;
use std::io::Write;
use std::process::ExitCode;

/// Phase-entangled coherent states over lossy fiber: rates, sweeps, oracle
/// checks, range plans and Monte Carlo coincidence runs.
#[derive(Parser)]
#[command(name = "catlink", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Success probabilities, counting rates, visibility and S at one point.
    Rates,
    /// One-axis parameter sweep.
    Sweep,
    /// Compare the truncated number-basis oracle with the closed forms.
    Oracle,
    /// Largest separation meeting a rate floor, and the best phase there.
    Plan,
    /// Poisson coincidence counts over a simulated run.
    Montecarlo,
}

fn run(cli: &Cli) -> Result<commands::Output, CliError> {
    let cfg = RunConfig::load(&cli.overrides)?;
    match cli.command {
        Command::Rates => commands::rates(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::Oracle => commands::oracle(&cfg),
        Command::Plan => commands::plan(&cfg),
        Command::Montecarlo => commands::montecarlo(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if let Err(e) = stdout.write_all(out.text.as_bytes()) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            match out.failure {
                Some(err) => {
                    eprintln!("error: {err}");
                    err.exit_code()
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
