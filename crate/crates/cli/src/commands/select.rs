//! `cpeval select`: filter, cluster, and pick candidate submissions.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use cpeval_core::corpus::{io as corpus_io, Problem};
use cpeval_core::judge::JudgeConfig;
use cpeval_core::runner::ResourceLimits;
use cpeval_core::selector::{
    behavior_signature, cluster, filter_samples_detailed, select_random, select_submissions,
    selection_entries, Sample, DEFAULT_PROBE_COUNT, MAX_CLUSTER_SAMPLES,
};
use cpeval_core::testgen::generate_probe_inputs;

use crate::util::{header, print_table, CmdError};
use crate::Cli;

#[derive(Args, Serialize)]
pub struct SelectArgs {
    /// problems.jsonl file.
    #[arg(long)]
    pub problems: PathBuf,
    /// Sample pool (line-delimited sample records, any number of problems).
    #[arg(long)]
    pub samples: PathBuf,
    /// Probe inputs file ({problem_id, input} records); generated by
    /// mutation when absent.
    #[arg(long)]
    pub probes: Option<PathBuf>,
    /// Number of probe inputs per problem when generating.
    #[arg(long, default_value_t = DEFAULT_PROBE_COUNT)]
    pub probe_count: usize,
    /// Submission budget per problem.
    #[arg(long, default_value_t = 10)]
    pub budget: usize,
    /// Cap on samples considered for clustering.
    #[arg(long, default_value_t = MAX_CLUSTER_SAMPLES)]
    pub max_cluster_samples: usize,
    /// Baseline mode: skip clustering, select uniformly at random from the
    /// filtered pool.
    #[arg(long)]
    pub random: bool,
    /// Selection record output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub problem_id: String,
    pub input: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct SelectionRecord {
    problem_id: String,
    id: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    cluster_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    cluster_size: Option<usize>,
}

pub fn run(cli: &Cli, args: &SelectArgs) -> Result<(), CmdError> {
    let problems: Vec<Problem> = corpus_io::read_records(&args.problems)?;
    let samples: Vec<Sample> = corpus_io::read_records(&args.samples)?;
    let probe_records: Vec<ProbeRecord> = match &args.probes {
        Some(path) => corpus_io::read_records(path)?,
        None => Vec::new(),
    };
    let (runner, pool) = super::runner_and_pool(cli)?;
    let judge_cfg = JudgeConfig::default();

    // Group samples by problem, keeping pool order within each group.
    let mut grouped: BTreeMap<&str, Vec<&Sample>> = BTreeMap::new();
    for s in &samples {
        grouped.entry(s.problem_id.as_str()).or_default().push(s);
    }

    let mut records = Vec::new();
    for problem in &problems {
        let Some(group) = grouped.get(problem.id.as_str()) else {
            continue;
        };
        let pool_samples: Vec<Sample> = group.iter().map(|&s| s.clone()).collect();
        let limits = ResourceLimits::for_problem(problem);
        let filtered =
            filter_samples_detailed(&pool, &runner, &pool_samples, problem, &limits, &judge_cfg)
                .map_err(|e| {
                    let mut err = CmdError::from(e);
                    err.message = format!("problem {}: {}", problem.id, err.message);
                    err
                })?;
        if filtered.is_empty() {
            continue;
        }
        let ids: Vec<String> = filtered.iter().map(|f| f.sample.id.clone()).collect();

        if args.random {
            for id in select_random(&ids, args.budget, cli.seed) {
                records.push(SelectionRecord {
                    problem_id: problem.id.clone(),
                    id,
                    cluster_index: None,
                    cluster_size: None,
                });
            }
            continue;
        }

        let probes: Vec<String> = {
            let from_file: Vec<String> = probe_records
                .iter()
                .filter(|p| p.problem_id == problem.id)
                .map(|p| p.input.clone())
                .collect();
            if from_file.is_empty() {
                let seed = crate::util::problem_seed(cli.seed, &problem.id);
                generate_probe_inputs(problem, args.probe_count, seed)
            } else {
                from_file
            }
        };
        let mut signatures = HashMap::new();
        for f in &filtered {
            let sig = behavior_signature(&pool, &f.program, &probes, &limits)?;
            signatures.insert(f.sample.id.clone(), sig);
        }
        let clusters = cluster(&ids, &signatures, args.max_cluster_samples)?;
        let selected = select_submissions(&clusters, args.budget);
        for entry in selection_entries(&clusters, &selected) {
            records.push(SelectionRecord {
                problem_id: problem.id.clone(),
                id: entry.id,
                cluster_index: Some(entry.cluster_index),
                cluster_size: Some(entry.cluster_size),
            });
        }
    }

    let args_json = serde_json::to_value(args).expect("serializable args");
    let hdr = header(cli.seed, "select", &args_json);
    corpus_io::write_records(&args.out, Some(&hdr), records.iter())?;

    print_table(
        &["problem", "sample", "cluster", "cluster-size"],
        &records
            .iter()
            .map(|r| {
                vec![
                    r.problem_id.clone(),
                    r.id.clone(),
                    r.cluster_index.map(|i| i.to_string()).unwrap_or_default(),
                    r.cluster_size.map(|s| s.to_string()).unwrap_or_default(),
                ]
            })
            .collect::<Vec<_>>(),
    );
    Ok(())
}
