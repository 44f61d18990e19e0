use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    match cellsel_cli::run(cellsel_cli::Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
