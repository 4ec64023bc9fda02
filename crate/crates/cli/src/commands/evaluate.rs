//! `cpeval evaluate`: n@k / pass@k solve rates with bootstrap CIs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use cpeval_core::corpus::io as corpus_io;
use cpeval_core::metrics::{
    aggregate_solve_rate, bootstrap_ci, n_at_k_exact, n_at_k_monte_carlo, pass_at_k,
    BootstrapParams, CountsRecord, EstimateMethod, EvalCounts,
};

use super::judge::OutcomeRecord;
use crate::util::{header, parse_u64_list, print_table, CmdError};
use crate::Cli;

#[derive(Args, Serialize)]
pub struct EvaluateArgs {
    /// Counts files ({problem_id, K, e, s} records); each file is one model
    /// run. Repeatable.
    #[arg(long)]
    pub counts: Vec<PathBuf>,
    /// Per-sample outcome file from `judge --outcomes`; grouped into counts.
    #[arg(long)]
    pub outcomes: Option<PathBuf>,
    /// Comma-separated submission budgets (n values).
    #[arg(long, default_value = "1,10")]
    pub n_list: String,
    /// Comma-separated sample budgets (k values).
    #[arg(long, default_value = "10")]
    pub k_list: String,
    /// Estimator for the point values.
    #[arg(long, value_enum, default_value = "exact")]
    pub method: MethodArg,
    /// Monte Carlo sample count (method = monte-carlo).
    #[arg(long, default_value_t = 10_000)]
    pub mc_samples: u64,
    /// Bootstrap resamples for confidence intervals; 0 disables CIs.
    #[arg(long, default_value_t = 2000)]
    pub resamples: u64,
    /// Estimate record output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Exact,
    MonteCarlo,
}

/// One reported estimate. `metric` distinguishes filtered n@k rows from
/// pass@k rows; the remaining fields follow the estimate schema.
#[derive(Debug, Serialize, Deserialize)]
struct EstimateRecord {
    metric: String,
    n: u64,
    k: u64,
    mean: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    ci_low: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    ci_high: Option<f64>,
    method: EstimateMethod,
    seed: u64,
}

pub fn run(cli: &Cli, args: &EvaluateArgs) -> Result<(), CmdError> {
    // Usage validation comes before any file I/O.
    if args.counts.is_empty() && args.outcomes.is_none() {
        return Err(CmdError::usage(
            "provide at least one --counts file or --outcomes",
        ));
    }
    let n_list = parse_u64_list(&args.n_list)?;
    let k_list = parse_u64_list(&args.k_list)?;
    for &n in &n_list {
        for &k in &k_list {
            if n > k {
                return Err(CmdError::usage(format!(
                    "requested n={n} > k={k}; submissions cannot exceed samples"
                )));
            }
        }
    }
    let runs = load_runs(args)?;

    let mut records = Vec::new();
    for &k in &k_list {
        for &n in &n_list {
            let mean = point_estimate(args, &runs, n, k, cli.seed)?;
            let (ci_low, ci_high) = interval(args, &runs, n, k, cli.seed)?;
            records.push(EstimateRecord {
                metric: "n_at_k".into(),
                n,
                k,
                mean,
                ci_low,
                ci_high,
                method: match args.method {
                    MethodArg::Exact => EstimateMethod::Exact,
                    MethodArg::MonteCarlo => EstimateMethod::MonteCarlo,
                },
                seed: cli.seed,
            });
        }
        // pass@k = k@k without filtering.
        let mut per_run = Vec::new();
        for run in &runs {
            let per_problem: Result<Vec<f64>, _> =
                run.iter().map(|c| pass_at_k(c, k)).collect();
            per_run.push(aggregate_solve_rate(&per_problem?)?);
        }
        records.push(EstimateRecord {
            metric: "pass_at_k".into(),
            n: k,
            k,
            mean: aggregate_solve_rate(&per_run)?,
            ci_low: None,
            ci_high: None,
            method: EstimateMethod::Exact,
            seed: cli.seed,
        });
    }

    let args_json = serde_json::to_value(args).expect("serializable args");
    let hdr = header(cli.seed, "evaluate", &args_json);
    corpus_io::write_records(&args.out, Some(&hdr), records.iter())?;

    print_table(
        &["metric", "n", "k", "mean", "ci_low", "ci_high"],
        &records
            .iter()
            .map(|r| {
                vec![
                    r.metric.clone(),
                    r.n.to_string(),
                    r.k.to_string(),
                    format!("{:.6}", r.mean),
                    r.ci_low.map(|v| format!("{v:.6}")).unwrap_or_default(),
                    r.ci_high.map(|v| format!("{v:.6}")).unwrap_or_default(),
                ]
            })
            .collect::<Vec<_>>(),
    );
    Ok(())
}

fn load_runs(args: &EvaluateArgs) -> Result<Vec<Vec<EvalCounts>>, CmdError> {
    let mut runs = Vec::new();
    for path in &args.counts {
        let records: Vec<CountsRecord> = corpus_io::read_records(path)?;
        let mut counts = Vec::with_capacity(records.len());
        for r in &records {
            r.validate()
                .map_err(|e| CmdError::data(format!("{}: {e}", path.display())))?;
            counts.push(r.counts);
        }
        runs.push(counts);
    }
    if let Some(path) = &args.outcomes {
        let outcomes: Vec<OutcomeRecord> = corpus_io::read_records(path)?;
        let mut grouped: BTreeMap<String, (u64, u64, u64)> = BTreeMap::new();
        for o in &outcomes {
            let entry = grouped.entry(o.problem_id.clone()).or_default();
            entry.0 += 1;
            if o.passed_examples {
                entry.1 += 1;
            }
            if o.solved {
                entry.2 += 1;
            }
        }
        let mut counts = Vec::with_capacity(grouped.len());
        for (problem_id, (total, e, s)) in grouped {
            let c = EvalCounts::new(total, e, s)
                .map_err(|err| CmdError::data(format!("problem {problem_id}: {err}")))?;
            counts.push(c);
        }
        runs.push(counts);
    }
    Ok(runs)
}

fn point_estimate(
    args: &EvaluateArgs,
    runs: &[Vec<EvalCounts>],
    n: u64,
    k: u64,
    seed: u64,
) -> Result<f64, CmdError> {
    let mut per_run = Vec::with_capacity(runs.len());
    for (run_idx, run) in runs.iter().enumerate() {
        let mut per_problem = Vec::with_capacity(run.len());
        for (problem_idx, c) in run.iter().enumerate() {
            let v = match args.method {
                MethodArg::Exact => n_at_k_exact(c, n, k)?,
                MethodArg::MonteCarlo => {
                    // One independent stream per (run, problem) pair.
                    let stream = seed
                        .wrapping_add(1 + run_idx as u64)
                        .wrapping_mul(1_000_003)
                        .wrapping_add(problem_idx as u64);
                    n_at_k_monte_carlo(c, n, k, args.mc_samples, stream)?
                }
            };
            per_problem.push(v);
        }
        per_run.push(aggregate_solve_rate(&per_problem)?);
    }
    Ok(aggregate_solve_rate(&per_run)?)
}

fn interval(
    args: &EvaluateArgs,
    runs: &[Vec<EvalCounts>],
    n: u64,
    k: u64,
    seed: u64,
) -> Result<(Option<f64>, Option<f64>), CmdError> {
    if args.resamples == 0 {
        return Ok((None, None));
    }
    let est = bootstrap_ci(
        runs,
        &BootstrapParams {
            n,
            k,
            resamples: args.resamples,
            seed,
        },
    )?;
    Ok((est.ci_low, est.ci_high))
}
