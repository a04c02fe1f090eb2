//! Experiment driver for the sharpflow library.
//!
//! `sharpflow run --config <path>` executes one experiment; `sharpflow sweep
//! --config <path> --param <name> --values <v1,v2,...>` repeats it along a
//! parameter ladder. Both write `manifest.json`, `results.csv` and
//! `summary.txt` into the configured output directory. Exit codes: 0 on
//! success, 2 on configuration errors, 3 on numerical failures.

use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "sharpflow", version, about = "Sharp-interface experiment driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        /// Path to the TOML configuration.
        #[arg(long)]
        config: PathBuf,
    },
    /// Repeat the experiment along a parameter ladder.
    Sweep {
        /// Path to the TOML configuration.
        #[arg(long)]
        config: PathBuf,
        /// Sweepable parameter: eps, gamma, n or h.
        #[arg(long)]
        param: String,
        /// Comma-separated parameter values.
        #[arg(long)]
        values: String,
    },
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config } => sharpflow::cli::command_run(config),
        Command::Sweep {
            config,
            param,
            values,
        } => sharpflow::cli::command_sweep(config, param, values),
    };
    if let Err(err) = result {
        eprintln!("{}", sharpflow::cli::error_record(&err));
        std::process::exit(sharpflow::cli::exit_code(&err));
    }
}
