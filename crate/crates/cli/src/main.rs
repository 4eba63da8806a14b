//! Command-line front end: run configured experiments, reproduce the
//! built-in four-generator benchmark, verify the numeric property suites,
//! or print a problem's centralized optimum.

use std::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ppsgda_cli::config::{load_config, ExperimentConfig};
use ppsgda_cli::experiment::{run_experiment, OracleSummary};
use ppsgda_cli::verify::run_all_checks;
use ppsgda_core::dispatch::solve_centralized;

#[derive(Parser)]
#[command(
    name = "ppsgda",
    version,
    about = "Distributed economic dispatch over directed graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        /// Path to the config file.
        config: PathBuf,
    },
    /// Run the built-in four-generator benchmark (4000 rounds).
    Fig1 {
        /// Directory receiving fig1_trace.csv and fig1_summary.json.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run the mixing, projection, and gradient property suites.
    Verify,
    /// Print the centralized optimum of a config's dispatch problem.
    Oracle {
        /// Path to the config file.
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<(), Box<dyn Error>> {
    match command {
        Command::Run { config } => {
            let config = load_config(&config)?;
            let artifacts = run_experiment(&config)?;
            println!("{}", serde_json::to_string_pretty(&artifacts.report)?);
            Ok(())
        }
        Command::Fig1 { out_dir } => {
            std::fs::create_dir_all(&out_dir)?;
            let config = ExperimentConfig::fig1(&out_dir);
            let artifacts = run_experiment(&config)?;
            println!("{}", serde_json::to_string_pretty(&artifacts.report)?);
            Ok(())
        }
        Command::Verify => {
            let outcomes = run_all_checks();
            let mut failed = 0usize;
            for outcome in &outcomes {
                let verdict = if outcome.pass { "PASS" } else { "FAIL" };
                println!("{verdict} {} — {}", outcome.name, outcome.detail);
                if !outcome.pass {
                    failed += 1;
                }
            }
            if failed > 0 {
                return Err(format!("{failed} of {} checks failed", outcomes.len()).into());
            }
            Ok(())
        }
        Command::Oracle { config } => {
            let config = load_config(&config)?;
            let built = config.build()?;
            let optimum = solve_centralized(&built.instance);
            let summary = OracleSummary::from(&optimum);
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }
    }
}
