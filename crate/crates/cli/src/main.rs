use std::process::ExitCode;

use clap::Parser;
use coldrec_cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(manifest) => {
            log::info!("run manifest: {}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
