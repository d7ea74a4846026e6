use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use invreg_cli::{run_config, Command, RunManifest};

/// Regularization-parameter selection studies for linear inverse problems.
#[derive(Debug, Parser)]
#[command(name = "invreg", version)]
struct Args {
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for CSV tables and metadata.json; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides `master_seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Caps the number of worker threads.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let manifest = RunManifest {
        command: args.command,
        config_path: args.config,
        output_dir: args.out,
        master_seed_override: args.seed,
        workers: args.workers,
    };
    match run_config(&manifest) {
        Ok(summary) => {
            println!("{}", summary.message);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("invreg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
