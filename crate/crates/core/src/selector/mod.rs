//! Submission selection: filter a sample pool by example tests, cluster the
//! survivors by behavior on probe inputs, then pick round-robin from the
//! largest cluster to the smallest.
//!
//! Correct programs tend to behave identically on arbitrary inputs while
//! incorrect ones disagree in many ways, so the biggest behavioral cluster
//! is the best place to spend the first submission.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::Problem;
use crate::judge::{normalize_output, JudgeConfig};
use crate::runner::{
    CompileFailure, CompiledProgram, ExecPool, ExecStatus, ResourceLimits, Runner, RunnerError,
};

/// Probe-input count used for clustering unless overridden.
pub const DEFAULT_PROBE_COUNT: usize = 50;
/// At most this many filtered samples are clustered; later samples are
/// dropped (earliest kept).
pub const MAX_CLUSTER_SAMPLES: usize = 8192;

#[derive(Debug, Error)]
pub enum SelectorError {
    #[error("missing behavior signature for sample {0:?}")]
    MissingSignature(String),
    #[error(transparent)]
    Runner(#[from] RunnerError),
    #[error(transparent)]
    Judge(#[from] crate::judge::JudgeError),
}

/// One model sample of a solution program.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub problem_id: String,
    pub language: String,
    pub source: String,
    #[serde(default)]
    pub metadata: serde_json::Map<String, serde_json::Value>,
}

/// Stable fingerprint of a normalized output token stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OutputFingerprint([u8; 32]);

impl OutputFingerprint {
    pub fn of_canonical_text(text: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        Self(hasher.finalize().into())
    }

    pub fn to_hex(self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// What a program did on one probe input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProbeOutcome {
    Ok(OutputFingerprint),
    Timeout,
    Crash,
}

/// Per-probe outcomes; equality is exact structural equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BehaviorSignature {
    pub per_probe: Vec<ProbeOutcome>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub signature: BehaviorSignature,
    /// Member sample ids in pool order.
    pub members: Vec<String>,
}

/// A filtered sample plus facts the contest simulator needs later.
#[derive(Debug, Clone)]
pub struct FilteredSample {
    pub sample: Sample,
    pub program: CompiledProgram,
    /// Whether the sample printed anything at all on the example tests.
    pub produced_output: bool,
}

/// Keep only samples whose compiled program passes every example test,
/// preserving pool order. Samples that fail to compile are dropped;
/// sandbox-setup failures abort.
pub fn filter_samples(
    pool: &ExecPool,
    runner: &Runner,
    samples: &[Sample],
    problem: &Problem,
    limits: &ResourceLimits,
    cfg: &JudgeConfig,
) -> Result<Vec<Sample>, SelectorError> {
    Ok(filter_samples_detailed(pool, runner, samples, problem, limits, cfg)?
        .into_iter()
        .map(|f| f.sample)
        .collect())
}

pub fn filter_samples_detailed(
    pool: &ExecPool,
    runner: &Runner,
    samples: &[Sample],
    problem: &Problem,
    limits: &ResourceLimits,
    cfg: &JudgeConfig,
) -> Result<Vec<FilteredSample>, SelectorError> {
    // Parallelism is across samples; each sample's example tests run
    // sequentially so a failing test short-circuits the rest.
    let outcomes = pool.map(samples, |_, sample| -> Result<_, SelectorError> {
        let solution = crate::corpus::Solution {
            language: sample.language.clone(),
            source: sample.source.clone(),
            labeled_correct: false,
        };
        let program = match runner.compile(&solution, limits) {
            Ok(p) => p,
            Err(CompileFailure::Rejected { .. }) | Err(CompileFailure::Timeout) => {
                return Ok(None)
            }
            Err(CompileFailure::Setup(e)) => return Err(e.into()),
        };
        let mut produced_output = false;
        for test in &problem.example_tests {
            let result = pool.execute(&program, &test.input, limits)?;
            if !normalize_output(&result.stdout).is_empty() {
                produced_output = true;
            }
            let kind = crate::judge::judge_run(&result, &test.output, cfg.float_tol);
            if kind != crate::judge::VerdictKind::Accepted {
                return Ok(None);
            }
        }
        Ok(Some((program, produced_output)))
    });

    let mut filtered = Vec::new();
    for (sample, outcome) in samples.iter().zip(outcomes) {
        if let Some((program, produced_output)) = outcome? {
            filtered.push(FilteredSample {
                sample: sample.clone(),
                program,
                produced_output,
            });
        }
    }
    Ok(filtered)
}

/// Run a program on every probe input and record a fingerprint of the
/// normalized output, or the failure class.
pub fn behavior_signature(
    pool: &ExecPool,
    program: &CompiledProgram,
    probes: &[String],
    limits: &ResourceLimits,
) -> Result<BehaviorSignature, SelectorError> {
    Ok(behavior_signature_detailed(pool, program, probes, limits)?.0)
}

/// Like [`behavior_signature`] but also returns the canonical output text
/// per successful probe, so tests can verify fingerprint equality is not a
/// hash collision.
pub fn behavior_signature_detailed(
    pool: &ExecPool,
    program: &CompiledProgram,
    probes: &[String],
    limits: &ResourceLimits,
) -> Result<(BehaviorSignature, Vec<Option<String>>), SelectorError> {
    let results = pool.map(probes, |_, probe| pool.execute(program, probe, limits));
    let mut per_probe = Vec::with_capacity(probes.len());
    let mut texts = Vec::with_capacity(probes.len());
    for result in results {
        let result = result?;
        match result.status {
            ExecStatus::Ok => {
                let text = normalize_output(&result.stdout).canonical_text();
                per_probe.push(ProbeOutcome::Ok(OutputFingerprint::of_canonical_text(&text)));
                texts.push(Some(text));
            }
            ExecStatus::Timeout => {
                per_probe.push(ProbeOutcome::Timeout);
                texts.push(None);
            }
            _ => {
                per_probe.push(ProbeOutcome::Crash);
                texts.push(None);
            }
        }
    }
    Ok((BehaviorSignature { per_probe }, texts))
}

/// Group filtered samples by identical behavior signature.
///
/// At most `max_samples` samples are considered (earliest in pool order).
/// Clusters come back sorted by size descending, ties broken by the pool
/// position of their earliest member; members stay in pool order.
pub fn cluster(
    filtered_ids: &[String],
    signatures: &HashMap<String, BehaviorSignature>,
    max_samples: usize,
) -> Result<Vec<Cluster>, SelectorError> {
    let considered = &filtered_ids[..filtered_ids.len().min(max_samples)];
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut index_of: HashMap<&BehaviorSignature, usize> = HashMap::new();
    for id in considered {
        let sig = signatures
            .get(id)
            .ok_or_else(|| SelectorError::MissingSignature(id.clone()))?;
        match index_of.get(sig) {
            Some(&i) => clusters[i].members.push(id.clone()),
            None => {
                index_of.insert(sig, clusters.len());
                clusters.push(Cluster {
                    signature: sig.clone(),
                    members: vec![id.clone()],
                });
            }
        }
    }
    // Stable sort: clusters were created in earliest-member order, so equal
    // sizes keep that order.
    clusters.sort_by_key(|c| std::cmp::Reverse(c.members.len()));
    Ok(clusters)
}

/// Round-robin over clusters in size order, one unseen member per cluster
/// per pass, until the budget is filled or samples run out.
pub fn select_submissions(clusters: &[Cluster], budget: usize) -> Vec<String> {
    let mut selected = Vec::new();
    if budget == 0 {
        return selected;
    }
    let mut cursor = vec![0usize; clusters.len()];
    loop {
        let mut advanced = false;
        for (ci, cluster) in clusters.iter().enumerate() {
            if cursor[ci] < cluster.members.len() {
                selected.push(cluster.members[cursor[ci]].clone());
                cursor[ci] += 1;
                advanced = true;
                if selected.len() == budget {
                    return selected;
                }
            }
        }
        if !advanced {
            return selected;
        }
    }
}

/// Baseline: uniform selection without replacement from the filtered pool.
pub fn select_random(filtered_ids: &[String], budget: usize, seed: u64) -> Vec<String> {
    let mut indices: Vec<usize> = (0..filtered_ids.len()).collect();
    let mut rng = crate::stream_rng(seed, 0x5e1e);
    let take = budget.min(indices.len());
    // Partial Fisher-Yates: the first `take` slots end up uniformly drawn.
    for i in 0..take {
        let j = i + rand::Rng::gen_range(&mut rng, 0..indices.len() - i);
        indices.swap(i, j);
    }
    indices[..take]
        .iter()
        .map(|&i| filtered_ids[i].clone())
        .collect()
}

/// One line of the selection output: a chosen sample and the cluster it
/// came from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionEntry {
    pub id: String,
    pub cluster_index: usize,
    pub cluster_size: usize,
}

/// Annotate an ordered selection with cluster provenance.
pub fn selection_entries(clusters: &[Cluster], selected: &[String]) -> Vec<SelectionEntry> {
    selected
        .iter()
        .map(|id| {
            let (ci, c) = clusters
                .iter()
                .enumerate()
                .find(|(_, c)| c.members.contains(id))
                .expect("selected id belongs to a cluster");
            SelectionEntry {
                id: id.clone(),
                cluster_index: ci,
                cluster_size: c.members.len(),
            }
        })
        .collect()
}
