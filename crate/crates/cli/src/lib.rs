// SPDX-License-Identifier: MIT OR Apache-2.0

//! Command-line front end for `blockseg`: segmentation of matrix files,
//! simulation, replicate sweeps and numerical theory checks.
//!
//! Exit statuses: 0 success, 1 invalid arguments, 2 I/O or parse failure,
//! 3 infeasible configuration or invalid input, 4 a checked bound or
//! identity does not hold.

#![forbid(unsafe_code)]

pub mod args;
pub mod commands;
pub mod error;
pub mod experiment;
pub mod report;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

pub use args::Cli;
pub use error::{exit, CliError, CliResult};
pub use experiment::{run_experiment, ExperimentConfig, RunOptions, RunSummary};

/// Parses `argv` (program name first), runs the command and returns the exit
/// status. Diagnostics go to standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => exit::OK,
                _ => exit::USAGE,
            };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<i32> {
    use args::Command;
    match &cli.command {
        Command::Segment(a) => commands::segment(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::TheoryCheck(a) => commands::theory_check(a),
        Command::Experiment(a) => {
            let cfg = ExperimentConfig::load(&a.config)?;
            let opts = RunOptions {
                resume: a.resume,
                jobs: a.jobs,
                timing: a.timing,
            };
            let s = run_experiment(&cfg, &a.output, &opts)?;
            eprintln!(
                "{} cells, {} rows ({} computed, {} kept from a previous run); summary in {}",
                s.cells,
                s.rows,
                s.computed,
                s.resumed,
                s.aggregate.display()
            );
            Ok(exit::OK)
        }
    }
}
