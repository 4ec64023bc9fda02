//! Bootstrap confidence intervals for aggregate n@k across model runs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EvalCounts, MetricsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveRateEstimate {
    pub mean: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ci_low: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ci_high: Option<f64>,
    pub method: EstimateMethod,
}

#[derive(Debug, Clone, Copy)]
pub struct BootstrapParams {
    pub n: u64,
    pub k: u64,
    pub resamples: u64,
    pub seed: u64,
}

pub const DEFAULT_RESAMPLES: u64 = 2000;

/// Bootstrap the aggregate n@k over model runs.
///
/// Each resample (a) draws models with replacement, then (b) per problem
/// redraws k of the original K pass/solve flags with replacement and
/// recomputes the solved probability from the resampled counts. Reported:
/// the mean over resamples and the empirical 2.5th/97.5th percentiles,
/// widened if necessary so the interval contains the mean.
pub fn bootstrap_ci(
    model_runs: &[Vec<EvalCounts>],
    params: &BootstrapParams,
) -> Result<SolveRateEstimate, MetricsError> {
    if model_runs.is_empty() || model_runs.iter().any(Vec::is_empty) {
        return Err(MetricsError::EmptyList);
    }
    if params.resamples < 100 {
        return Err(MetricsError::Domain(
            "resamples must be >= 100".into(),
        ));
    }
    if params.n == 0 || params.k == 0 {
        return Err(MetricsError::Domain("need n >= 1 and k >= 1".into()));
    }
    for run in model_runs {
        for c in run {
            if params.k > c.total {
                return Err(MetricsError::Domain(format!(
                    "k={} exceeds K={} for some problem",
                    params.k, c.total
                )));
            }
        }
    }

    let mut rng = crate::stream_rng(params.seed, 0xb007);
    let m = model_runs.len();
    let mut replicates = Vec::with_capacity(params.resamples as usize);
    for _ in 0..params.resamples {
        let mut model_sum = 0.0;
        for _ in 0..m {
            let chosen = &model_runs[rng.gen_range(0..m)];
            let mut problem_sum = 0.0;
            for c in chosen {
                problem_sum += resampled_solve_prob(&mut rng, c, params.n, params.k);
            }
            model_sum += problem_sum / chosen.len() as f64;
        }
        replicates.push(model_sum / m as f64);
    }

    let mean = replicates.iter().sum::<f64>() / replicates.len() as f64;
    replicates.sort_by(|a, b| a.partial_cmp(b).expect("no NaNs"));
    let low = percentile(&replicates, 2.5).min(mean);
    let high = percentile(&replicates, 97.5).max(mean);
    Ok(SolveRateEstimate {
        mean,
        ci_low: Some(low),
        ci_high: Some(high),
        method: EstimateMethod::Exact,
    })
}

/// Redraw k flags with replacement from the K original ones and compute the
/// probability that submitting min(e*, n) of the example-passers solves the
/// problem.
fn resampled_solve_prob<R: Rng>(rng: &mut R, c: &EvalCounts, n: u64, k: u64) -> f64 {
    let mut solvers = 0u64;
    let mut passers = 0u64;
    for _ in 0..k {
        let u = rng.gen_range(0..c.total);
        if u < c.solving {
            solvers += 1;
        } else if u < c.example_passing {
            passers += 1;
        }
    }
    let e_star = solvers + passers;
    super::solved_prob_f64(e_star, solvers, e_star.min(n))
}

/// Linear-interpolation percentile over a sorted slice.
fn percentile(sorted: &[f64], pct: f64) -> f64 {
    let idx = pct / 100.0 * (sorted.len() - 1) as f64;
    let lo = idx.floor() as usize;
    let hi = idx.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = idx - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}
