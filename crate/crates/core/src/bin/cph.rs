use std::process::ExitCode;

use cph::cli::{run_and_write, CliError, RunConfig};

fn main() -> ExitCode {
    let config = match RunConfig::from_args(std::env::args()) {
        Ok(config) => config,
        Err(CliError::Args(e)) => e.exit(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run_and_write(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
