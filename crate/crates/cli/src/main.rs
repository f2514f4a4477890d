//! `qtomo`: file-based front end for quorum checks, sampling and reconstruction.

mod error;
mod io;
mod kernels;
mod observable;
mod quorum;
mod reconstruct;
mod sample;
mod state;

use clap::{Parser, Subcommand};
use error::{usage, CliError, CliResult};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qtomo", version, about = "Quantum tomography by quorum estimation")]
struct Cli {
    /// Print errors as JSON on stderr.
    #[arg(long, global = true)]
    json_errors: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a density matrix and write it as state JSON.
    State(state::StateCmd),
    /// Simulate measurements of a quorum on a state and write records CSV.
    Sample(sample::SampleCmd),
    /// Estimate a density matrix or one observable from records.
    Reconstruct(reconstruct::ReconstructCmd),
    /// Build, verify and dualize finite spanning sets.
    #[command(subcommand)]
    Quorum(quorum::QuorumCmd),
    /// Tabulate estimation kernels.
    #[command(subcommand)]
    Kernels(kernels::KernelsCmd),
}

fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("QTOMO_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("QTOMO_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| usage(format!("cannot size the thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    init_threads()?;
    match cli.command {
        Command::State(c) => c.run(),
        Command::Sample(c) => c.run(),
        Command::Reconstruct(c) => c.run(),
        Command::Quorum(c) => c.run(),
        Command::Kernels(c) => c.run(),
    }
}

fn report(err: &CliError, json: bool) -> ExitCode {
    if json {
        eprintln!("{}", err.to_json());
    } else {
        eprintln!("qtomo: {err}");
    }
    ExitCode::from(err.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let json = std::env::args().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion)
                || e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            {
                let _ = e.print();
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                    ExitCode::from(2)
                } else {
                    ExitCode::SUCCESS
                };
            }
            if json {
                return report(&usage(e.to_string().trim().to_string()), true);
            }
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e, json),
    }
}
