//! `cpeval clean`: the dataset cleaning pipeline.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use cpeval_core::corpus::{
    self, clean_by_execution, dedup_problems, dedup_solutions, filter_low_coverage_problems,
    io as corpus_io, Dataset, ExecObservation, ExecResults, SplitKind,
};
use cpeval_core::judge::{judge_run, normalize_output, JudgeConfig, VerdictKind};
use cpeval_core::runner::{CompileFailure, ResourceLimits};

use crate::util::{header, print_table, CmdError};
use crate::Cli;

#[derive(Args, Serialize)]
pub struct CleanArgs {
    /// Directory holding problems.jsonl and solutions.jsonl.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory the cleaned dataset is written to.
    #[arg(long)]
    pub output: PathBuf,
    /// Which split the dataset belongs to.
    #[arg(long, value_enum, default_value = "train")]
    pub split: SplitArg,
    /// Skip the execution-based cleaning step (no programs are run).
    #[arg(long)]
    pub skip_execution: bool,
    /// Also write the removal report as a record file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitArg {
    Train,
    Valid,
    Test,
}

impl From<SplitArg> for SplitKind {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => SplitKind::Train,
            SplitArg::Valid => SplitKind::Valid,
            SplitArg::Test => SplitKind::Test,
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct CleanSummary {
    problems_merged: usize,
    solutions_deduped: usize,
    solutions_dropped_no_pass: usize,
    tests_dropped_low_output: usize,
    solutions_dropped_low_pass: usize,
    problems_dropped_low_coverage: usize,
}

pub fn run(cli: &Cli, args: &CleanArgs) -> Result<(), CmdError> {
    let dataset = corpus_io::read_dataset(&args.input, args.split.into())?;
    dataset.validate()?;

    let mut summary = CleanSummary::default();
    let count_solutions =
        |d: &Dataset| d.solutions.values().map(Vec::len).sum::<usize>();

    let step1 = dedup_problems(&dataset);
    summary.problems_merged = dataset.problems.len() - step1.problems.len();

    let step2 = dedup_solutions(&step1);
    summary.solutions_deduped = count_solutions(&step1) - count_solutions(&step2);

    let step3 = if args.skip_execution {
        step2.clone()
    } else {
        let results = execute_all(cli, &step2)?;
        let (cleaned, report) = clean_by_execution(&step2, &results)?;
        summary.solutions_dropped_no_pass = report.solutions_dropped_no_pass;
        summary.tests_dropped_low_output = report.tests_dropped_low_output;
        summary.solutions_dropped_low_pass = report.solutions_dropped_low_pass;
        cleaned
    };

    let step4 = filter_low_coverage_problems(&step3);
    summary.problems_dropped_low_coverage = step3.problems.len() - step4.problems.len();

    let args_json = serde_json::to_value(args).expect("serializable args");
    let hdr = header(cli.seed, "clean", &args_json);
    corpus_io::write_dataset(&args.output, &step4, Some(&hdr))?;
    if let Some(report_path) = &args.report {
        corpus_io::write_records(report_path, Some(&hdr), [&summary])?;
    }

    println!(
        "cleaned dataset: {} problems, {} solutions",
        step4.problems.len(),
        count_solutions(&step4)
    );
    print_table(
        &["step", "removed"],
        &[
            vec!["duplicate problems merged".into(), summary.problems_merged.to_string()],
            vec!["duplicate solutions".into(), summary.solutions_deduped.to_string()],
            vec![
                "solutions passing no tests".into(),
                summary.solutions_dropped_no_pass.to_string(),
            ],
            vec![
                "tests with <10% output producers".into(),
                summary.tests_dropped_low_output.to_string(),
            ],
            vec![
                "solutions passing <10% of tests".into(),
                summary.solutions_dropped_low_pass.to_string(),
            ],
            vec![
                "low-coverage problems".into(),
                summary.problems_dropped_low_coverage.to_string(),
            ],
        ],
    );
    Ok(())
}

/// Compile and run every solution on every test of its problem, recording
/// pass/nonempty-output observations for the cleaning rules.
fn execute_all(cli: &Cli, dataset: &Dataset) -> Result<ExecResults, CmdError> {
    let (runner, pool) = super::runner_and_pool(cli)?;
    let judge_cfg = JudgeConfig::default();
    let mut results = ExecResults::new();

    for problem in &dataset.problems {
        let limits = ResourceLimits::for_problem(problem);
        let solutions = dataset.solutions_for(&problem.id);
        let tests: Vec<(corpus::TestRef, &corpus::TestCase)> = problem.all_tests().collect();

        let per_solution = pool.map(solutions, |_, solution| {
            let program = match runner.compile(solution, &limits) {
                Ok(p) => p,
                Err(CompileFailure::Rejected { .. }) | Err(CompileFailure::Timeout) => {
                    return Ok(None);
                }
                Err(CompileFailure::Setup(e)) => return Err(e),
            };
            let mut obs = Vec::with_capacity(tests.len());
            for (_, test) in &tests {
                let result = pool.execute(&program, &test.input, &limits)?;
                obs.push(ExecObservation {
                    accepted: judge_run(&result, &test.output, judge_cfg.float_tol)
                        == VerdictKind::Accepted,
                    nonempty_output: !normalize_output(&result.stdout).is_empty(),
                });
            }
            Ok(Some(obs))
        });

        for (si, outcome) in per_solution.into_iter().enumerate() {
            match outcome.map_err(CmdError::from)? {
                Some(obs) => {
                    for ((test_ref, _), ob) in tests.iter().zip(obs) {
                        results.insert((problem.id.clone(), si, *test_ref), ob);
                    }
                }
                None => {
                    // Compile failure: observed as passing nothing and
                    // producing nothing.
                    for (test_ref, _) in &tests {
                        results.insert(
                            (problem.id.clone(), si, *test_ref),
                            ExecObservation {
                                accepted: false,
                                nonempty_output: false,
                            },
                        );
                    }
                }
            }
        }
    }
    Ok(results)
}
