use std::process::ExitCode;

use clap::Parser;
use quenched_core::cli::{run, Cli, RunConfig};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match RunConfig::from_cli(cli).and_then(run) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
