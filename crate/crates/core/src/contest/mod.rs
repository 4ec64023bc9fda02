//! Timed-contest simulation: submission waves, judging, penalty scoring,
//! scoreboard ranking, and rating estimation across contests.

mod rating;

pub use rating::{estimate_rating, RatingParams, RatingUpdate};

use std::collections::BTreeMap;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Problem;
use crate::judge::{judge_compiled, JudgeConfig, VerdictKind};
use crate::runner::{ExecPool, ResourceLimits, Runner};
use crate::selector::{
    behavior_signature, cluster, filter_samples_detailed, select_submissions, FilteredSample,
    Sample, MAX_CLUSTER_SAMPLES,
};

/// Delay between a wave's trigger and its recorded submission time,
/// accounting for clustering.
pub const CLUSTERING_DELAY_MINUTES: u32 = 2;
pub const DEFAULT_SUBMISSION_BUDGET: usize = 10;

#[derive(Debug, Error)]
pub enum ContestError {
    #[error("scoreboard is empty")]
    EmptyScoreboard,
    #[error("participant {0:?} has no rating_before")]
    MissingRating(String),
    #[error("missing scoring parameter: {0}")]
    MissingParams(String),
}

/// When to fire one submission wave: at the earlier of the time trigger and
/// the sample-count trigger.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SubmissionPoint {
    /// Fraction of the contest duration elapsed.
    pub time_fraction: f64,
    /// Fraction of the expected sample count accumulated.
    pub sample_fraction: f64,
    /// Submissions allowed at this wave.
    pub quota: WaveQuota,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveQuota {
    Count(usize),
    /// Whatever is left of the per-problem budget.
    Remaining,
}

/// The standard three-wave schedule: one early probe submission, a handful
/// mid-contest, and the rest near the end.
pub fn default_submission_points() -> Vec<SubmissionPoint> {
    vec![
        SubmissionPoint {
            time_fraction: 0.1,
            sample_fraction: 0.005,
            quota: WaveQuota::Count(1),
        },
        SubmissionPoint {
            time_fraction: 0.5,
            sample_fraction: 0.05,
            quota: WaveQuota::Count(5),
        },
        SubmissionPoint {
            time_fraction: 0.9,
            sample_fraction: 1.0,
            quota: WaveQuota::Remaining,
        },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledWave {
    /// Minute of the contest at which the wave's submissions land.
    pub minute: u32,
    /// Number of submissions allowed in this wave.
    pub count: usize,
}

/// Turn submission points into concrete waves.
///
/// Each wave fires at the earlier of its time trigger and the first minute
/// at which `sample_progress` reaches its sample fraction of
/// `expected_total`; the recorded submission minute adds the clustering
/// delay. Wave minutes are strictly increasing and never beyond the contest
/// end (waves that cannot fit are dropped).
pub fn schedule_submissions(
    contest_minutes: u32,
    sample_progress: impl Fn(u32) -> u64,
    expected_total: u64,
    budget: usize,
    points: &[SubmissionPoint],
) -> Vec<ScheduledWave> {
    let mut waves = Vec::with_capacity(points.len());
    let mut allocated = 0usize;
    let mut prev_minute: Option<u32> = None;
    for point in points {
        let time_trigger = (point.time_fraction * contest_minutes as f64).ceil() as u32;
        let needed = point.sample_fraction * expected_total as f64;
        let sample_trigger = (0..=contest_minutes)
            .find(|&m| expected_total > 0 && sample_progress(m) as f64 >= needed);
        let trigger = sample_trigger
            .map(|s| s.min(time_trigger))
            .unwrap_or(time_trigger);
        let mut minute = trigger.saturating_add(CLUSTERING_DELAY_MINUTES);
        if let Some(prev) = prev_minute {
            minute = minute.max(prev + 1);
        }
        if minute > contest_minutes {
            break;
        }
        let count = match point.quota {
            WaveQuota::Count(c) => c.min(budget.saturating_sub(allocated)),
            WaveQuota::Remaining => budget.saturating_sub(allocated),
        };
        allocated += count;
        prev_minute = Some(minute);
        waves.push(ScheduledWave { minute, count });
    }
    waves
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemOutcome {
    pub problem_id: String,
    pub solved: bool,
    pub incorrect_before_solve: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub solve_time_minutes: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContestOutcome {
    pub problems: Vec<ProblemOutcome>,
}

/// One problem's inputs to a simulation.
#[derive(Debug, Clone)]
pub struct ContestProblem {
    pub problem: Problem,
    pub samples: Vec<Sample>,
    /// Probe inputs for behavioral clustering.
    pub probes: Vec<String>,
}

/// How samples become available over the contest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleArrival {
    /// The whole pool is available from minute zero.
    AllUpfront,
    /// The pool grows linearly over the contest.
    LinearRamp,
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub schedule: Vec<ScheduledWave>,
    pub contest_minutes: u32,
    /// None lifts the per-problem submission cap.
    pub budget_per_problem: Option<usize>,
    pub arrival: SampleArrival,
    pub judge: JudgeConfig,
    pub max_cluster_samples: usize,
}

impl SimulationConfig {
    pub fn standard(contest_minutes: u32, expected_total: u64) -> Self {
        let budget = DEFAULT_SUBMISSION_BUDGET;
        Self {
            schedule: schedule_submissions(
                contest_minutes,
                |_| 0,
                expected_total,
                budget,
                &default_submission_points(),
            ),
            contest_minutes,
            budget_per_problem: Some(budget),
            arrival: SampleArrival::AllUpfront,
            judge: JudgeConfig::default(),
            max_cluster_samples: MAX_CLUSTER_SAMPLES,
        }
    }
}

fn available_count(total: usize, minute: u32, contest_minutes: u32, arrival: SampleArrival) -> usize {
    match arrival {
        SampleArrival::AllUpfront => total,
        SampleArrival::LinearRamp => {
            ((total as f64) * (minute as f64) / (contest_minutes as f64).max(1.0)).ceil() as usize
        }
    }
    .min(total)
}

/// Simulate one contest: at every scheduled wave, filter-cluster-select over
/// the samples available so far and submit the wave's quota of not yet
/// submitted candidates; judging is against hidden plus generated tests.
/// Problems simulate independently; per-problem judging failures are
/// recorded without aborting the contest.
pub fn simulate_contest(
    runner: &Runner,
    pool: &ExecPool,
    problems: &[ContestProblem],
    cfg: &SimulationConfig,
) -> ContestOutcome {
    let outcomes = problems
        .iter()
        .map(|cp| match simulate_problem(runner, pool, cp, cfg) {
            Ok(outcome) => outcome,
            Err(e) => ProblemOutcome {
                problem_id: cp.problem.id.clone(),
                solved: false,
                incorrect_before_solve: 0,
                solve_time_minutes: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    ContestOutcome { problems: outcomes }
}

fn simulate_problem(
    runner: &Runner,
    pool: &ExecPool,
    cp: &ContestProblem,
    cfg: &SimulationConfig,
) -> Result<ProblemOutcome, crate::selector::SelectorError> {
    let limits = ResourceLimits::for_problem(&cp.problem);
    let evaluation_tests = cp.problem.evaluation_tests();
    let budget = cfg.budget_per_problem.unwrap_or(usize::MAX);

    let mut outcome = ProblemOutcome {
        problem_id: cp.problem.id.clone(),
        solved: false,
        incorrect_before_solve: 0,
        solve_time_minutes: None,
        error: None,
    };

    // Caches reused across waves: filtering and signatures are
    // deterministic per sample.
    let mut filtered_cache: HashMap<usize, Vec<FilteredSample>> = HashMap::new();
    let mut signature_cache: HashMap<String, crate::selector::BehaviorSignature> = HashMap::new();
    let mut submitted: Vec<String> = Vec::new();

    'waves: for wave in &cfg.schedule {
        if outcome.solved || submitted.len() >= budget {
            break;
        }
        let avail = available_count(
            cp.samples.len(),
            wave.minute,
            cfg.contest_minutes,
            cfg.arrival,
        );
        if avail == 0 {
            continue;
        }
        if let std::collections::hash_map::Entry::Vacant(slot) = filtered_cache.entry(avail) {
            slot.insert(filter_samples_detailed(
                pool,
                runner,
                &cp.samples[..avail],
                &cp.problem,
                &limits,
                &cfg.judge,
            )?);
        }
        let filtered = &filtered_cache[&avail];
        if filtered.is_empty() {
            continue;
        }
        for f in filtered {
            if !signature_cache.contains_key(&f.sample.id) {
                let sig = behavior_signature(pool, &f.program, &cp.probes, &limits)?;
                signature_cache.insert(f.sample.id.clone(), sig);
            }
        }
        let ids: Vec<String> = filtered.iter().map(|f| f.sample.id.clone()).collect();
        let clusters = cluster(&ids, &signature_cache, cfg.max_cluster_samples)?;
        let selection = select_submissions(&clusters, budget.min(ids.len()));

        let mut sent_this_wave = 0usize;
        for candidate_id in selection {
            if sent_this_wave >= wave.count || submitted.len() >= budget {
                continue 'waves;
            }
            if submitted.contains(&candidate_id) {
                continue;
            }
            submitted.push(candidate_id.clone());
            sent_this_wave += 1;
            let entry = filtered
                .iter()
                .find(|f| f.sample.id == candidate_id)
                .expect("selected from filtered ids");
            // Automatic pre-screening: a candidate that never printed
            // anything on the example tests is counted as incorrect without
            // being submitted for judging.
            if !entry.produced_output {
                outcome.incorrect_before_solve += 1;
                continue;
            }
            let verdict = judge_compiled(
                pool,
                &entry.program,
                &evaluation_tests,
                &limits,
                &cfg.judge,
            )?;
            if verdict.kind == VerdictKind::Accepted {
                outcome.solved = true;
                outcome.solve_time_minutes = Some(wave.minute);
                break 'waves;
            }
            outcome.incorrect_before_solve += 1;
        }
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringMode {
    IcpcPenalty,
    PointsDecay,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreParams {
    /// ICPC penalty minutes per incorrect submission on a solved problem.
    pub penalty_minutes_per_wrong: u32,
    pub contest_minutes: u32,
    /// Per-problem point values; required for points-decay scoring.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub problem_points: Option<BTreeMap<String, f64>>,
    pub decay_rate: f64,
    pub per_wrong_deduction: f64,
    pub min_floor_fraction: f64,
}

impl Default for ScoreParams {
    fn default() -> Self {
        Self {
            penalty_minutes_per_wrong: 20,
            contest_minutes: 120,
            problem_points: None,
            decay_rate: 0.5,
            per_wrong_deduction: 50.0,
            min_floor_fraction: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContestScore {
    Icpc { solved: usize, penalty_minutes: u64 },
    Points(f64),
}

impl ContestScore {
    /// Scalar encoding comparable against scoreboard scores: ICPC orders by
    /// problems solved first, then lower penalty.
    pub fn scalar(&self) -> f64 {
        match self {
            ContestScore::Icpc {
                solved,
                penalty_minutes,
            } => *solved as f64 * 1e6 - *penalty_minutes as f64,
            ContestScore::Points(p) => *p,
        }
    }
}

/// Score a contest outcome.
///
/// ICPC mode: primary key is problems solved, secondary the sum over solved
/// problems of solve time plus penalty minutes per prior incorrect
/// submission. Points mode: per solved problem,
/// `max(floor(points * (1 - decay_rate * t / T)) - deduction * incorrect,
/// floor(points * floor_fraction))`.
pub fn score_outcome(
    outcome: &ContestOutcome,
    mode: ScoringMode,
    params: &ScoreParams,
) -> Result<ContestScore, ContestError> {
    match mode {
        ScoringMode::IcpcPenalty => {
            let mut solved = 0usize;
            let mut penalty = 0u64;
            for p in &outcome.problems {
                if let (true, Some(t)) = (p.solved, p.solve_time_minutes) {
                    solved += 1;
                    penalty += t as u64
                        + params.penalty_minutes_per_wrong as u64 * p.incorrect_before_solve as u64;
                }
            }
            Ok(ContestScore::Icpc {
                solved,
                penalty_minutes: penalty,
            })
        }
        ScoringMode::PointsDecay => {
            let table = params
                .problem_points
                .as_ref()
                .ok_or_else(|| ContestError::MissingParams("problem_points".into()))?;
            let mut total = 0.0;
            for p in &outcome.problems {
                let (true, Some(t)) = (p.solved, p.solve_time_minutes) else {
                    continue;
                };
                let points = *table.get(&p.problem_id).ok_or_else(|| {
                    ContestError::MissingParams(format!("problem_points[{}]", p.problem_id))
                })?;
                let decayed = (points
                    * (1.0 - params.decay_rate * t as f64 / params.contest_minutes as f64))
                    .floor()
                    - params.per_wrong_deduction * p.incorrect_before_solve as f64;
                let floor_value = (points * params.min_floor_fraction).floor();
                total += decayed.max(floor_value);
            }
            Ok(ContestScore::Points(total))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreboardEntry {
    pub participant_id: String,
    pub score: f64,
    pub rank: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rating_before: Option<i32>,
}

/// Percent of scoreboard entries that scored strictly better; ties count as
/// not better, so beating everyone is 0%.
pub fn rank_percentile(score: f64, scoreboard: &[ScoreboardEntry]) -> Result<f64, ContestError> {
    if scoreboard.is_empty() {
        return Err(ContestError::EmptyScoreboard);
    }
    let better = scoreboard.iter().filter(|e| e.score > score).count();
    Ok(100.0 * better as f64 / scoreboard.len() as f64)
}
