use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kpzfp_cli::{cmd_calibrate, cmd_export_plots, cmd_simulate, cmd_verify, Config, RunConfig};

/// Eternal-solution simulator and verification harness.
#[derive(Parser)]
#[command(name = "kpzfp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and export the run artifacts.
    Simulate {
        /// Run configuration file.
        config: PathBuf,
    },
    /// Run verification suites against the configured backend.
    Verify {
        /// Run configuration file.
        config: PathBuf,
    },
    /// Export plot-ready CSVs from a finished run directory.
    ExportPlots {
        /// Directory written by a previous simulate run.
        run_dir: PathBuf,
    },
    /// Re-derive scaling constants and statistical rates.
    Calibrate {
        /// Run configuration file.
        config: PathBuf,
    },
}

fn load(config: &PathBuf) -> kpzfp_cli::Result<RunConfig> {
    RunConfig::from_config(Config::load(config)?)
}

fn run(cli: Cli) -> kpzfp_cli::Result<()> {
    match cli.command {
        Command::Simulate { config } => {
            let outcome = cmd_simulate(&load(&config)?)?;
            println!("run written to {}", outcome.out_dir.display());
            for (name, hash) in &outcome.files {
                println!("{name} sha256={hash}");
            }
            Ok(())
        }
        Command::Verify { config } => {
            cmd_verify(&load(&config)?)?;
            Ok(())
        }
        Command::ExportPlots { run_dir } => {
            for path in cmd_export_plots(&run_dir)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Calibrate { config } => cmd_calibrate(&load(&config)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kpzfp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
