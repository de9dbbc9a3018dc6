//! `thermoform` — run thermodynamic-formalism experiments from JSON configs.
//!
//! `validate` checks a config and touches nothing; `run` executes its task
//! and writes CSV/JSON artifacts.  Exit codes: 0 on success, 1 for config
//! problems (the message names the offending field), 2 when a solver fails
//! to converge.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod runner;

#[derive(Parser)]
#[command(
    name = "thermoform",
    version,
    about = "Pressure, equilibrium states, and large-deviation reports for shifts of finite type"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and fully validate a config without running anything.
    Validate {
        /// Path to the JSON experiment config.
        config: PathBuf,
    },
    /// Validate a config, execute its task, and write the artifacts.
    Run {
        /// Path to the JSON experiment config.
        config: PathBuf,
        /// Output directory; overrides the config's `out_dir` (default ".").
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; overrides the config's `jobs` (default 1).
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config } => runner::validate(&config),
        Command::Run { config, out, jobs } => {
            runner::run(&config, &runner::RunOptions { out, jobs })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(runner::exit_code(&e) as u8)
        }
    }
}
