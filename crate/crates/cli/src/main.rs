//! cpeval: execution-based evaluation toolkit for competitive-programming
//! code generation.

mod commands;
mod util;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::util::{CmdError, ErrorClass};

#[derive(Parser)]
#[command(
    name = "cpeval",
    version,
    about = "Judge, select, and score machine-generated contest solutions"
)]
pub struct Cli {
    /// Master seed; recorded in every output artifact.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker pool size; 0 means one per logical CPU. Never changes outputs.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,

    /// Toolchain configuration file (TOML); defaults to built-in python/cpp.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Clean a dataset: dedup problems and solutions, drop solutions/tests
    /// by execution, filter low-coverage problems.
    Clean(commands::clean::CleanArgs),
    /// Generate consensus-verified tests by mutating existing inputs.
    GenTests(commands::gen_tests::GenTestsArgs),
    /// Judge sample programs against problem tests.
    Judge(commands::judge::JudgeArgs),
    /// Compute n@k / pass@k solve rates with bootstrap confidence intervals.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Filter, cluster, and select candidate submissions.
    Select(commands::select::SelectArgs),
    /// Simulate contest participation over sample pools.
    Simulate(commands::simulate::SimulateArgs),
    /// Estimate a rating trajectory across contests.
    Rating(commands::rating::RatingArgs),
    /// Longest common substring between a candidate and a corpus.
    Lcs(commands::lcs::LcsArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are successes, everything else is usage.
            let code = if e.use_stderr() {
                ErrorClass::Usage.exit_code() as u8
            } else {
                0
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.class.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CmdError> {
    match &cli.command {
        Command::Clean(args) => commands::clean::run(&cli, args),
        Command::GenTests(args) => commands::gen_tests::run(&cli, args),
        Command::Judge(args) => commands::judge::run(&cli, args),
        Command::Evaluate(args) => commands::evaluate::run(&cli, args),
        Command::Select(args) => commands::select::run(&cli, args),
        Command::Simulate(args) => commands::simulate::run(&cli, args),
        Command::Rating(args) => commands::rating::run(&cli, args),
        Command::Lcs(args) => commands::lcs::run(&cli, args),
    }
}
