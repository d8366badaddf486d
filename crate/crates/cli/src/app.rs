//! Argument parsing and dispatch shared by the binary and in-process callers.

use std::ffi::OsString;

use clap::{Parser, Subcommand};

use crate::commands::{self, CompareArgs, EvalArgs, ExperimentArgs, VerifyArgs};

#[derive(Parser)]
#[command(name = "maxprod", version, about = "Max-product Meyer-König-Zeller operators: evaluation, bounds, verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an operator at one point
    Eval(EvalArgs),
    /// Run verification sweeps; exits 1 if any case fails
    Verify(VerifyArgs),
    /// Sup errors, error bounds and fitted rates over a range of degrees
    Converge(ExperimentArgs),
    /// Sup errors of the max-product and classical operators side by side
    Compare(CompareArgs),
}

/// Runs the command line `args` (program name first) and returns the exit code:
/// 0 pass, 1 verification failure, 2 usage error, 3 truncation infeasible.
pub fn run_from<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return err.exit_code() as u8;
        }
    };
    let outcome = match &cli.command {
        Command::Eval(args) => commands::run_eval(args),
        Command::Verify(args) => commands::run_verify(args),
        Command::Converge(args) => commands::run_converge(args),
        Command::Compare(args) => commands::run_compare(args),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(err) => {
            eprintln!("error: {err}");
            err.code()
        }
    }
}
