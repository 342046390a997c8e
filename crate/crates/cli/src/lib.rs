//! Command-line driver for the photocount simulator and estimators.
//!
//! Exit codes distinguish how a run failed: 0 on success, 1 when the
//! configuration or input files are unusable, 2 when the numbers
//! themselves give out (an undefined correlation, a degenerate fit, or a
//! histogram that cannot be resampled).

pub mod commands;
pub mod config;

use clap::error::ErrorKind;
use clap::Parser;

#[derive(Debug, Parser)]
#[command(
    name = "photocount",
    version,
    about = "Photon-number statistics on a multi-pixel photon counter"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: commands::Command,
}

/// Parses the process arguments, runs the selected command, and returns
/// the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

/// Exit code for a library error: 2 for numeric failures, 1 otherwise.
pub fn exit_code(err: &photocount::Error) -> i32 {
    use photocount::Error;
    match err {
        Error::UndefinedCorrelation { .. }
        | Error::DegenerateFit(_)
        | Error::SignedHistogram(_) => 2,
        _ => 1,
    }
}
