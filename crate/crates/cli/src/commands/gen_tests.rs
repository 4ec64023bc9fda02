//! `cpeval gen-tests`: mutation-based test generation with reference
//! consensus.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use cpeval_core::corpus::{io as corpus_io, SplitKind};
use cpeval_core::judge::JudgeConfig;
use cpeval_core::runner::{CompileFailure, ResourceLimits};
use cpeval_core::testgen::{generate_tests, MutationBudget, TestgenError};

use crate::util::{header, print_table, CmdError};
use crate::Cli;

#[derive(Args, Serialize)]
pub struct GenTestsArgs {
    /// Directory holding problems.jsonl and solutions.jsonl.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory the augmented dataset is written to.
    #[arg(long)]
    pub output: PathBuf,
    /// Maximum accepted tests per problem.
    #[arg(long, default_value_t = 20)]
    pub max_tests: usize,
    /// Reference CPU budget per problem, in seconds.
    #[arg(long, default_value_t = 60.0)]
    pub max_cpu_seconds: f64,
    /// Summary record file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Serialize)]
struct ProblemGenReport {
    problem_id: String,
    accepted: usize,
    rejected_disagreement: usize,
    rejected_reference_failure: usize,
    rejected_timeout: usize,
    rejected_duplicate: usize,
    reference_count: usize,
    skipped: Option<String>,
}

pub fn run(cli: &Cli, args: &GenTestsArgs) -> Result<(), CmdError> {
    let mut dataset = corpus_io::read_dataset(&args.input, SplitKind::Train)?;
    dataset.validate()?;
    let (runner, pool) = super::runner_and_pool(cli)?;
    let judge_cfg = JudgeConfig::default();
    let budget = MutationBudget {
        max_cpu_seconds: args.max_cpu_seconds,
        max_tests: args.max_tests,
    };

    let mut reports = Vec::new();
    let solutions = dataset.solutions.clone();
    for problem in &mut dataset.problems {
        let limits = ResourceLimits::for_problem(problem);
        let correct: Vec<_> = solutions
            .get(&problem.id)
            .map(|sols| sols.iter().filter(|s| s.labeled_correct).collect())
            .unwrap_or_default();

        let mut references = Vec::new();
        let mut compile_failures = 0;
        for solution in &correct {
            match runner.compile(solution, &limits) {
                Ok(p) => references.push(p),
                Err(CompileFailure::Setup(e)) => return Err(e.into()),
                Err(_) => compile_failures += 1,
            }
        }

        if references.is_empty() {
            // Per-problem failure is non-fatal; record it and move on.
            reports.push(ProblemGenReport {
                problem_id: problem.id.clone(),
                accepted: 0,
                rejected_disagreement: 0,
                rejected_reference_failure: 0,
                rejected_timeout: 0,
                rejected_duplicate: 0,
                reference_count: 0,
                skipped: Some(format!(
                    "no usable reference solutions ({compile_failures} failed to compile)"
                )),
            });
            continue;
        }

        let seed = crate::util::problem_seed(cli.seed, &problem.id);
        match generate_tests(problem, &references, &pool, &budget, seed, &judge_cfg) {
            Ok((tests, report)) => {
                problem.generated_tests.extend(tests);
                reports.push(ProblemGenReport {
                    problem_id: problem.id.clone(),
                    accepted: report.accepted,
                    rejected_disagreement: report.rejected_disagreement,
                    rejected_reference_failure: report.rejected_reference_failure,
                    rejected_timeout: report.rejected_timeout,
                    rejected_duplicate: report.rejected_duplicate,
                    reference_count: report.reference_count,
                    skipped: None,
                });
            }
            Err(TestgenError::Runner(e)) => return Err(e.into()),
            Err(e) => reports.push(ProblemGenReport {
                problem_id: problem.id.clone(),
                accepted: 0,
                rejected_disagreement: 0,
                rejected_reference_failure: 0,
                rejected_timeout: 0,
                rejected_duplicate: 0,
                reference_count: references.len(),
                skipped: Some(e.to_string()),
            }),
        }
    }

    let args_json = serde_json::to_value(args).expect("serializable args");
    let hdr = header(cli.seed, "gen-tests", &args_json);
    corpus_io::write_dataset(&args.output, &dataset, Some(&hdr))?;
    if let Some(path) = &args.report {
        corpus_io::write_records(path, Some(&hdr), reports.iter())?;
    }

    print_table(
        &["problem", "accepted", "disagree", "ref-fail", "timeout", "dup", "refs", "note"],
        &reports
            .iter()
            .map(|r| {
                vec![
                    r.problem_id.clone(),
                    r.accepted.to_string(),
                    r.rejected_disagreement.to_string(),
                    r.rejected_reference_failure.to_string(),
                    r.rejected_timeout.to_string(),
                    r.rejected_duplicate.to_string(),
                    r.reference_count.to_string(),
                    r.skipped.clone().unwrap_or_default(),
                ]
            })
            .collect::<Vec<_>>(),
    );
    Ok(())
}
