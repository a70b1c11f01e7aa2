use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gencap_cli::config::{load_config, validate_config};
use gencap_cli::run::{is_capacity_error, run_experiment, RunOptions};

/// Monte Carlo estimation of generalization capacity for sparse
/// mean-localization cost functions.
#[derive(Parser)]
#[command(name = "gencap", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        /// Path to a key=value config file.
        config: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = one per logical CPU).
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory (overrides GENCAP_OUT and the config's `out`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config file and report all problems with line numbers.
    Validate {
        /// Path to a key=value config file.
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match validate_config(&config) {
            Ok(diags) if diags.is_empty() => {
                println!("ok");
                ExitCode::SUCCESS
            }
            Ok(diags) => {
                for d in &diags {
                    eprintln!("{d}");
                }
                ExitCode::from(1)
            }
            Err(err) => {
                eprintln!("error: {err:#}");
                ExitCode::from(1)
            }
        },
        Command::Run { config, seed, workers, out } => {
            let cfg = match load_config(&config) {
                Ok(Ok(cfg)) => cfg,
                Ok(Err(diags)) => {
                    for d in &diags {
                        eprintln!("{d}");
                    }
                    return ExitCode::from(1);
                }
                Err(err) => {
                    eprintln!("error: {err:#}");
                    return ExitCode::from(1);
                }
            };
            let opts = RunOptions { seed, workers, out };
            match run_experiment(&cfg, &opts) {
                Ok(output) => {
                    println!(
                        "wrote {} rows to {}",
                        output.rows,
                        output.csv_path.display()
                    );
                    println!("manifest: {}", output.manifest_path.display());
                    ExitCode::SUCCESS
                }
                Err(err) if is_capacity_error(&err) => {
                    eprintln!("error: {err:#}");
                    ExitCode::from(2)
                }
                Err(err) => {
                    eprintln!("error: {err:#}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
