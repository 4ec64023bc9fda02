//! `cpeval simulate`: contest participation over sample pools.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use cpeval_core::contest::{
    default_submission_points, rank_percentile, schedule_submissions, score_outcome,
    simulate_contest, ContestProblem, ContestScore, SampleArrival, ScoreParams, ScoreboardEntry,
    ScoringMode, SimulationConfig, DEFAULT_SUBMISSION_BUDGET,
};
use cpeval_core::corpus::{io as corpus_io, Problem};
use cpeval_core::judge::JudgeConfig;
use cpeval_core::selector::{Sample, DEFAULT_PROBE_COUNT, MAX_CLUSTER_SAMPLES};
use cpeval_core::testgen::generate_probe_inputs;

use super::select::ProbeRecord;
use crate::util::{header, print_table, CmdError};
use crate::Cli;

#[derive(Args, Serialize)]
pub struct SimulateArgs {
    /// problems.jsonl file.
    #[arg(long)]
    pub problems: PathBuf,
    /// Sample pools (sample records for all problems).
    #[arg(long)]
    pub samples: PathBuf,
    /// Scoreboard records for percentile ranking.
    #[arg(long)]
    pub scoreboard: Option<PathBuf>,
    /// Probe inputs ({problem_id, input} records); generated when absent.
    #[arg(long)]
    pub probes: Option<PathBuf>,
    #[arg(long, default_value_t = 120)]
    pub contest_minutes: u32,
    /// Expected number of samples per problem for the schedule's
    /// sample-fraction triggers.
    #[arg(long, default_value_t = 0)]
    pub expected_total: u64,
    /// Per-problem submission budget.
    #[arg(long, default_value_t = DEFAULT_SUBMISSION_BUDGET)]
    pub budget: usize,
    /// Lift the per-problem submission cap.
    #[arg(long)]
    pub unlimited: bool,
    /// Samples arrive linearly over the contest instead of all upfront.
    #[arg(long)]
    pub linear_arrival: bool,
    #[arg(long, value_enum, default_value = "icpc")]
    pub mode: ModeArg,
    /// Per-problem points file for points mode ({problem_id, points}).
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Outcome record output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Icpc,
    Points,
}

#[derive(Debug, Serialize, serde::Deserialize)]
pub struct PointsRecord {
    pub problem_id: String,
    pub points: f64,
}

pub fn run(cli: &Cli, args: &SimulateArgs) -> Result<(), CmdError> {
    let problems: Vec<Problem> = corpus_io::read_records(&args.problems)?;
    let samples: Vec<Sample> = corpus_io::read_records(&args.samples)?;
    let probe_records: Vec<ProbeRecord> = match &args.probes {
        Some(path) => corpus_io::read_records(path)?,
        None => Vec::new(),
    };
    let (runner, pool) = super::runner_and_pool(cli)?;

    let mut grouped: BTreeMap<&str, Vec<Sample>> = BTreeMap::new();
    for s in &samples {
        grouped.entry(s.problem_id.as_str()).or_default().push(s.clone());
    }

    let contest_problems: Vec<ContestProblem> = problems
        .iter()
        .map(|p| {
            let probes: Vec<String> = {
                let from_file: Vec<String> = probe_records
                    .iter()
                    .filter(|r| r.problem_id == p.id)
                    .map(|r| r.input.clone())
                    .collect();
                if from_file.is_empty() {
                    let seed = crate::util::problem_seed(cli.seed, &p.id);
                    generate_probe_inputs(p, DEFAULT_PROBE_COUNT, seed)
                } else {
                    from_file
                }
            };
            ContestProblem {
                problem: p.clone(),
                samples: grouped.get(p.id.as_str()).cloned().unwrap_or_default(),
                probes,
            }
        })
        .collect();

    let budget = if args.unlimited {
        usize::MAX
    } else {
        args.budget
    };
    let schedule = schedule_submissions(
        args.contest_minutes,
        |_| 0,
        args.expected_total,
        budget,
        &default_submission_points(),
    );
    let cfg = SimulationConfig {
        schedule,
        contest_minutes: args.contest_minutes,
        budget_per_problem: if args.unlimited { None } else { Some(args.budget) },
        arrival: if args.linear_arrival {
            SampleArrival::LinearRamp
        } else {
            SampleArrival::AllUpfront
        },
        judge: JudgeConfig::default(),
        max_cluster_samples: MAX_CLUSTER_SAMPLES,
    };

    let outcome = simulate_contest(&runner, &pool, &contest_problems, &cfg);

    let mut params = ScoreParams {
        contest_minutes: args.contest_minutes,
        ..Default::default()
    };
    let mode = match args.mode {
        ModeArg::Icpc => ScoringMode::IcpcPenalty,
        ModeArg::Points => ScoringMode::PointsDecay,
    };
    if let Some(path) = &args.points {
        let records: Vec<PointsRecord> = corpus_io::read_records(path)?;
        params.problem_points = Some(
            records
                .into_iter()
                .map(|r| (r.problem_id, r.points))
                .collect(),
        );
    }
    let score = score_outcome(&outcome, mode, &params)?;

    let args_json = serde_json::to_value(args).expect("serializable args");
    let hdr = header(cli.seed, "simulate", &args_json);
    corpus_io::write_records(&args.out, Some(&hdr), outcome.problems.iter())?;

    print_table(
        &["problem", "solved", "incorrect", "time(min)", "note"],
        &outcome
            .problems
            .iter()
            .map(|p| {
                vec![
                    p.problem_id.clone(),
                    if p.solved { "1" } else { "0" }.into(),
                    p.incorrect_before_solve.to_string(),
                    p.solve_time_minutes
                        .map(|t| t.to_string())
                        .unwrap_or_else(|| "-".into()),
                    p.error.clone().unwrap_or_default(),
                ]
            })
            .collect::<Vec<_>>(),
    );
    match score {
        ContestScore::Icpc {
            solved,
            penalty_minutes,
        } => println!("score: {solved} solved, {penalty_minutes} penalty minutes"),
        ContestScore::Points(p) => println!("score: {p} points"),
    }

    match &args.scoreboard {
        Some(path) => {
            let entries: Vec<ScoreboardEntry> = corpus_io::read_records(path)?;
            let pct = rank_percentile(score.scalar(), &entries)?;
            println!("percentile: top {pct:.1}% of {} participants", entries.len());
        }
        None => eprintln!("warning: no scoreboard given, percentile omitted"),
    }
    Ok(())
}
