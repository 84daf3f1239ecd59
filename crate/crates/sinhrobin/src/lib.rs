//! Configuration, file formats and the command line for `sinhrobin-core`.

pub mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use sinhrobin_core::Error;

pub use config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Subcommand {
    Theta0,
    GreenTable,
    RobinProfile,
    HamiltonianMin,
    AnsatzCheck,
    Solve,
    Sweep,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Theta0 => "theta0",
            Subcommand::GreenTable => "green-table",
            Subcommand::RobinProfile => "robin-profile",
            Subcommand::HamiltonianMin => "hamiltonian-min",
            Subcommand::AnsatzCheck => "ansatz-check",
            Subcommand::Solve => "solve",
            Subcommand::Sweep => "sweep",
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_NUMERICAL
    }
}

/// Runs one subcommand on a parsed configuration. `out` overrides the
/// configured output directory.
pub fn run_config(cmd: Subcommand, config: &RunConfig, out: Option<&Path>) -> Result<commands::Outcome, Error> {
    let dir: PathBuf = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&config.output_dir));
    let ctx = commands::Context { config, out_dir: &dir, meta: commands::metadata(config, cmd.name())? };
    match cmd {
        Subcommand::Theta0 => commands::theta0(&ctx),
        Subcommand::GreenTable => commands::green_table(&ctx),
        Subcommand::RobinProfile => commands::robin_profile(&ctx),
        Subcommand::HamiltonianMin => commands::hamiltonian_min(&ctx),
        Subcommand::AnsatzCheck => commands::ansatz_check(&ctx),
        Subcommand::Solve => commands::solve(&ctx),
        Subcommand::Sweep => commands::sweep(&ctx),
    }
}

/// Loads the configuration, applies the seed override and runs.
pub fn run(
    cmd: Subcommand,
    config_path: &Path,
    out: Option<&Path>,
    seed: Option<u64>,
) -> Result<commands::Outcome, Error> {
    let mut config = RunConfig::load(config_path)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    run_config(cmd, &config, out)
}
