//! Command-line front end for the `sephill` library.
//!
//! Exit codes: 0 success, 2 configuration, 3 I/O, 4 numeric degeneracy,
//! 5 experiment failure cap.

pub mod args;
pub mod commands;
pub mod error;
pub mod format;
pub mod io;
pub mod manifest;

pub use args::{Cli, Command};
pub use error::{CliError, CliResult};

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Hillplot(a) => commands::hillplot(a),
        Command::VerifyBounds(a) => commands::verify_bounds(a),
        Command::Experiment(a) => commands::experiment(a),
    }
}
