use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pullvexlab_cli::{configure_threads, run_file, Command};

/// Runs a pullvexlab scenario from a JSON config.
#[derive(Debug, Parser)]
#[command(name = "pullvexlab", version)]
struct Args {
    command: Command,
    /// Scenario config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let result = configure_threads().and_then(|()| run_file(args.command, &args.config, args.seed, args.out.as_deref()));
    match result {
        Ok(summary) => {
            let status = serde_json::to_value(summary.outcome).ok();
            let status = status.as_ref().and_then(|v| v.as_str()).unwrap_or("?");
            println!("{}: {status} ({})", summary.command, summary.output_dir.display());
            ExitCode::from(summary.outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
