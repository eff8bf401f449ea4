use std::process::ExitCode;

use clap::Parser;
use mgsec_cli::{execute, write_outcome, Cli, EXIT_VALIDATION_FAIL};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage problems share the config-error code; 2 is reserved for numerics.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let common = cli.command.common();
    let outcome = match execute(&cli.command) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    if let Err(e) = write_outcome(common, &outcome) {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code());
    }
    if let Some(summary) = &outcome.summary {
        eprintln!("validate: {summary}");
    }
    match outcome.validation_passed {
        Some(false) => ExitCode::from(EXIT_VALIDATION_FAIL),
        _ => ExitCode::SUCCESS,
    }
}
