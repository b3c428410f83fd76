//! `mrf-relax`: generate MRF instances, solve their local polytope
//! relaxation, verify bounds, and rerun the benchmark experiments.

mod experiment;
mod files;
mod generate;
mod options;
mod solve;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Exit status for verification failures.
const EXIT_VERIFY: u8 = 1;
/// Exit status for bad input: flags, unreadable or malformed files.
const EXIT_USAGE: u8 = 2;
/// Exit status for numerical failures inside a solver or projection.
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "mrf-relax", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a random model in UAI format.
    Generate(generate::GenerateArgs),
    /// Solve the relaxation of a model and write bounds, marginals and logs.
    Solve(solve::SolveArgs),
    /// Check marginals (and optionally a dual) against a model.
    Verify(verify::VerifyArgs),
    /// Run one of the benchmark experiments.
    Experiment(experiment::ExperimentArgs),
}

/// Outcome of a command that ran to completion.
pub enum Status {
    Ok,
    VerificationFailed,
    NumericalFailure,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<mrf_relax::Error>(),
            Some(mrf_relax::Error::Numerical { .. })
        )
    });
    if numerical {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate::run(&a),
        Command::Solve(a) => solve::run(&a),
        Command::Verify(a) => verify::run(&a),
        Command::Experiment(a) => experiment::run(&a),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::VerificationFailed) => ExitCode::from(EXIT_VERIFY),
        Ok(Status::NumericalFailure) => ExitCode::from(EXIT_NUMERICAL),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
