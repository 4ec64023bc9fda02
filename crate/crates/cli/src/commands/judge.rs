//! `cpeval judge`: verdicts for sample programs on problem tests.

use std::collections::HashMap;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use cpeval_core::corpus::{io as corpus_io, Problem, Solution, TestCase};
use cpeval_core::judge::{judge_solution_timed, JudgeConfig, VerdictRecord};
use cpeval_core::runner::ResourceLimits;
use cpeval_core::selector::Sample;

use crate::util::{header, print_table, CmdError};
use crate::Cli;

#[derive(Args, Serialize)]
pub struct JudgeArgs {
    /// problems.jsonl file.
    #[arg(long)]
    pub problems: PathBuf,
    /// Samples to judge (line-delimited sample records).
    #[arg(long)]
    pub samples: PathBuf,
    /// Which tests to judge against.
    #[arg(long, value_enum, default_value = "evaluation")]
    pub tests: TestSelection,
    /// Absolute tolerance for numeric output comparison.
    #[arg(long, default_value_t = 1e-5)]
    pub float_tol: f64,
    /// Verdict record output.
    #[arg(long)]
    pub out: PathBuf,
    /// Also grade example and evaluation tests separately into per-sample
    /// outcome records usable by `evaluate --outcomes`.
    #[arg(long)]
    pub outcomes: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestSelection {
    Example,
    Evaluation,
    All,
}

/// Per-sample pass flags on example tests and the full evaluation suite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub problem_id: String,
    pub sample_id: String,
    pub passed_examples: bool,
    pub solved: bool,
}

pub fn run(cli: &Cli, args: &JudgeArgs) -> Result<(), CmdError> {
    let problems: Vec<Problem> = corpus_io::read_records(&args.problems)?;
    let samples: Vec<Sample> = corpus_io::read_records(&args.samples)?;
    let by_id: HashMap<&str, &Problem> = problems.iter().map(|p| (p.id.as_str(), p)).collect();
    let (runner, pool) = super::runner_and_pool(cli)?;
    let judge_cfg = JudgeConfig {
        float_tol: args.float_tol,
        ..Default::default()
    };

    let mut verdicts: Vec<VerdictRecord> = Vec::new();
    let mut outcomes: Vec<OutcomeRecord> = Vec::new();
    for sample in &samples {
        let problem = by_id.get(sample.problem_id.as_str()).ok_or_else(|| {
            CmdError::data(format!(
                "sample {} references unknown problem {}",
                sample.id, sample.problem_id
            ))
        })?;
        let limits = ResourceLimits::for_problem(problem);
        let solution = Solution {
            language: sample.language.clone(),
            source: sample.source.clone(),
            labeled_correct: false,
        };
        let suite: Vec<TestCase> = match args.tests {
            TestSelection::Example => problem.example_tests.clone(),
            TestSelection::Evaluation => problem.evaluation_tests(),
            TestSelection::All => problem.all_tests().map(|(_, t)| t.clone()).collect(),
        };
        let (verdict, cpu) =
            judge_solution_timed(&runner, &pool, &solution, &suite, &limits, &judge_cfg)?;
        verdicts.push(VerdictRecord {
            problem_id: sample.problem_id.clone(),
            sample_id: sample.id.clone(),
            kind: verdict.kind,
            failing_test_index: verdict.failing_test_index,
            cpu_time_used: VerdictRecord::record_cpu(verdict.kind, cpu, limits.cpu_time),
            detail: verdict.detail.clone(),
        });

        if args.outcomes.is_some() {
            // Empty suites are vacuous: no examples means nothing filters the
            // sample out, no evaluation tests means it cannot be solved.
            let passed_examples = if problem.example_tests.is_empty() {
                true
            } else {
                judge_solution_timed(
                    &runner,
                    &pool,
                    &solution,
                    &problem.example_tests,
                    &limits,
                    &judge_cfg,
                )?
                .0
                .is_accepted()
            };
            let eval_tests = problem.evaluation_tests();
            let solved = if eval_tests.is_empty() {
                false
            } else if args.tests == TestSelection::Evaluation {
                // The main pass already judged exactly this suite.
                verdict.is_accepted()
            } else {
                judge_solution_timed(&runner, &pool, &solution, &eval_tests, &limits, &judge_cfg)?
                    .0
                    .is_accepted()
            };
            outcomes.push(OutcomeRecord {
                problem_id: sample.problem_id.clone(),
                sample_id: sample.id.clone(),
                passed_examples,
                solved: solved && passed_examples,
            });
        }
    }

    let args_json = serde_json::to_value(args).expect("serializable args");
    let hdr = header(cli.seed, "judge", &args_json);
    corpus_io::write_records(&args.out, Some(&hdr), verdicts.iter())?;
    if let Some(path) = &args.outcomes {
        corpus_io::write_records(path, Some(&hdr), outcomes.iter())?;
    }

    print_table(
        &["problem", "sample", "verdict", "failing-test"],
        &verdicts
            .iter()
            .map(|v| {
                vec![
                    v.problem_id.clone(),
                    v.sample_id.clone(),
                    format!("{:?}", v.kind),
                    v.failing_test_index
                        .map(|i| i.to_string())
                        .unwrap_or_default(),
                ]
            })
            .collect::<Vec<_>>(),
    );
    Ok(())
}
