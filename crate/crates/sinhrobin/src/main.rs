use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use sinhrobin::{exit_code, run, Subcommand, EXIT_NUMERICAL};

/// Green functions, reduced energies and Newton solves for the sinh-Poisson
/// equation with a Robin boundary condition.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[arg(value_enum)]
    command: Subcommand,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the multi-start jitter, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command, &cli.config, cli.out.as_deref(), cli.seed) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if outcome.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                for f in &outcome.failures {
                    eprintln!("error: {f}");
                }
                ExitCode::from(EXIT_NUMERICAL as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
