use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use imstn_cli::{load_config, run_experiment, ExperimentSpec, RunOptions};

#[derive(Parser)]
#[command(name = "imstn", version, about = "Offloading simulator for integrated satellite-terrestrial backhaul")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment description (JSON).
    Run {
        spec: PathBuf,
        /// Override the base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to the spec's, then $IMSTN_OUT_DIR/<name>.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Number of sweep points simulated concurrently.
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Print the default experiment description.
    DumpDefaults,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::DumpDefaults => serde_json::to_string_pretty(&ExperimentSpec::default())
            .map(|json| println!("{json}"))
            .map_err(anyhow::Error::from),
        Command::Run { spec, seed, out_dir, parallel } => load_config(&spec)
            .and_then(|spec| run_experiment(&spec, &RunOptions { seed, out_dir, parallel }))
            .map(|report| print!("{}", report.digest()))
            .map_err(anyhow::Error::from),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
