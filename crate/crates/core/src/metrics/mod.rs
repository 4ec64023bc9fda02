//! Solve-rate estimators over per-problem sample counts.
//!
//! A problem's evaluation is summarized by three counts: K samples drawn,
//! e of them passing the example tests, s fully correct. The n@k metric is
//! the probability of solving the problem when k samples are drawn and at
//! most n of the example-passing ones are submitted. It is computed three
//! ways that cross-validate each other: an exact closed form, Monte Carlo
//! simulation of the two-stage hypergeometric draw, and bootstrap
//! resampling for confidence intervals.

mod bootstrap;

pub use bootstrap::{
    bootstrap_ci, BootstrapParams, EstimateMethod, SolveRateEstimate, DEFAULT_RESAMPLES,
};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

/// Largest K for which the exact estimator uses big-rational arithmetic;
/// beyond it, log-space floating point takes over.
const RATIONAL_MAX_K: u64 = 256;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("invalid counts: {0}")]
    InvalidCounts(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("empty input list")]
    EmptyList,
}

/// Per-problem evaluation counts: K samples, e passing example tests,
/// s fully correct. Invariant: 0 <= s <= e <= K.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    #[serde(rename = "K")]
    pub total: u64,
    #[serde(rename = "e")]
    pub example_passing: u64,
    #[serde(rename = "s")]
    pub solving: u64,
}

impl EvalCounts {
    pub fn new(total: u64, example_passing: u64, solving: u64) -> Result<Self, MetricsError> {
        if solving > example_passing || example_passing > total {
            return Err(MetricsError::InvalidCounts(format!(
                "need s <= e <= K, got K={total} e={example_passing} s={solving}"
            )));
        }
        Ok(Self {
            total,
            example_passing,
            solving,
        })
    }
}

/// One `{problem_id, K, e, s}` line of a counts file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountsRecord {
    pub problem_id: String,
    #[serde(flatten)]
    pub counts: EvalCounts,
}

impl CountsRecord {
    pub fn validate(&self) -> Result<(), MetricsError> {
        EvalCounts::new(
            self.counts.total,
            self.counts.example_passing,
            self.counts.solving,
        )
        .map(|_| ())
    }
}

fn check_n_k(counts: &EvalCounts, n: u64, k: u64) -> Result<(), MetricsError> {
    if n == 0 {
        return Err(MetricsError::Domain("n must be >= 1".into()));
    }
    if k == 0 || k > counts.total {
        return Err(MetricsError::Domain(format!(
            "need 1 <= k <= K, got k={k} K={}",
            counts.total
        )));
    }
    Ok(())
}

fn big_choose(n: u64, r: u64) -> BigInt {
    if r > n {
        return BigInt::zero();
    }
    let r = r.min(n - r);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..r {
        num *= BigInt::from(n - i);
        den *= BigInt::from(i + 1);
    }
    num / den
}

fn ln_choose(n: u64, r: u64) -> Option<f64> {
    if r > n {
        return None;
    }
    Some(ln_gamma(n as f64 + 1.0) - ln_gamma(r as f64 + 1.0) - ln_gamma((n - r) as f64 + 1.0))
}

/// P(at least one solver among n' draws without replacement from a pool of
/// `pool` filtered samples containing `solvers` solvers), as a rational.
fn solved_prob_rational(pool: u64, solvers: u64, n_prime: u64) -> BigRational {
    if n_prime == 0 || pool == 0 {
        return BigRational::zero();
    }
    let losers = pool - solvers;
    if n_prime > losers {
        return BigRational::one();
    }
    BigRational::one()
        - BigRational::new(big_choose(losers, n_prime), big_choose(pool, n_prime))
}

fn solved_prob_f64(pool: u64, solvers: u64, n_prime: u64) -> f64 {
    if n_prime == 0 || pool == 0 {
        return 0.0;
    }
    let losers = pool - solvers;
    match (ln_choose(losers, n_prime), ln_choose(pool, n_prime)) {
        (Some(a), Some(b)) => 1.0 - (a - b).exp(),
        _ => 1.0,
    }
}

/// Exact n@k for one problem, in rational arithmetic.
///
/// The outer stage draws k of the K samples without replacement and counts
/// example-passers e'; the inner stage submits n' = min(e', n) draws from
/// the full filtered pool of e samples containing s solvers. The result is
/// the expectation of the solved indicator over both stages.
pub fn n_at_k_exact_rational(
    counts: &EvalCounts,
    n: u64,
    k: u64,
) -> Result<BigRational, MetricsError> {
    check_n_k(counts, n, k)?;
    let (total, e, s) = (counts.total, counts.example_passing, counts.solving);
    if e == 0 || s == 0 {
        return Ok(BigRational::zero());
    }
    let denom = big_choose(total, k);
    let lo = k.saturating_sub(total - e);
    let hi = e.min(k);
    let mut acc = BigRational::zero();
    for e_prime in lo..=hi {
        let ways = big_choose(e, e_prime) * big_choose(total - e, k - e_prime);
        let pmf = BigRational::new(ways, denom.clone());
        let n_prime = e_prime.min(n);
        acc += pmf * solved_prob_rational(e, s, n_prime);
    }
    Ok(acc)
}

/// Exact n@k for one problem.
///
/// Uses big-rational arithmetic for small K and a log-space evaluation of
/// the same closed form for large K (binomial coefficients up to K around
/// 10^6 overflow every fixed-width type).
pub fn n_at_k_exact(counts: &EvalCounts, n: u64, k: u64) -> Result<f64, MetricsError> {
    if counts.total <= RATIONAL_MAX_K {
        return Ok(n_at_k_exact_rational(counts, n, k)?
            .to_f64()
            .expect("probability fits in f64"));
    }
    n_at_k_log_space(counts, n, k)
}

fn n_at_k_log_space(counts: &EvalCounts, n: u64, k: u64) -> Result<f64, MetricsError> {
    check_n_k(counts, n, k)?;
    let (total, e, s) = (counts.total, counts.example_passing, counts.solving);
    if e == 0 || s == 0 {
        return Ok(0.0);
    }
    let ln_denom = ln_choose(total, k).expect("k <= K");
    let lo = k.saturating_sub(total - e);
    let hi = e.min(k);
    let mut acc = 0.0;
    for e_prime in lo..=hi {
        let (Some(a), Some(b)) = (ln_choose(e, e_prime), ln_choose(total - e, k - e_prime)) else {
            continue;
        };
        let pmf = (a + b - ln_denom).exp();
        acc += pmf * solved_prob_f64(e, s, e_prime.min(n));
    }
    Ok(acc.clamp(0.0, 1.0))
}

/// One hypergeometric draw: number of successes when drawing `draws` items
/// without replacement from `successes` + `failures`.
pub(crate) fn hypergeometric_draw<R: Rng>(
    rng: &mut R,
    successes: u64,
    failures: u64,
    draws: u64,
) -> u64 {
    let mut succ = successes;
    let mut fail = failures;
    let mut got = 0;
    for _ in 0..draws {
        let remaining = succ + fail;
        if remaining == 0 {
            break;
        }
        if rng.gen_range(0..remaining) < succ {
            got += 1;
            succ -= 1;
        } else {
            fail -= 1;
        }
    }
    got
}

/// Monte Carlo n@k: the mean of `samples` Bernoulli draws following the
/// two-stage hypergeometric sampling procedure exactly as specified.
/// Deterministic for a fixed seed.
pub fn n_at_k_monte_carlo(
    counts: &EvalCounts,
    n: u64,
    k: u64,
    samples: u64,
    seed: u64,
) -> Result<f64, MetricsError> {
    check_n_k(counts, n, k)?;
    if samples == 0 {
        return Err(MetricsError::Domain("samples must be >= 1".into()));
    }
    let (total, e, s) = (counts.total, counts.example_passing, counts.solving);
    let mut rng = crate::stream_rng(seed, 0x6d63);
    let mut solved = 0u64;
    for _ in 0..samples {
        let e_prime = hypergeometric_draw(&mut rng, e, total - e, k);
        let n_prime = e_prime.min(n);
        let s_prime = hypergeometric_draw(&mut rng, s, e - s, n_prime);
        if s_prime > 0 {
            solved += 1;
        }
    }
    Ok(solved as f64 / samples as f64)
}

/// pass@k as a rational: probability at least one of k drawn samples is
/// fully correct, with no filtering.
pub fn pass_at_k_rational(counts: &EvalCounts, k: u64) -> Result<BigRational, MetricsError> {
    check_n_k(counts, 1, k)?;
    let (total, s) = (counts.total, counts.solving);
    if s == 0 {
        return Ok(BigRational::zero());
    }
    if k > total - s {
        return Ok(BigRational::one());
    }
    Ok(BigRational::one()
        - BigRational::new(big_choose(total - s, k), big_choose(total, k)))
}

/// pass@k = 1 - C(K-s, k) / C(K, k).
pub fn pass_at_k(counts: &EvalCounts, k: u64) -> Result<f64, MetricsError> {
    if counts.total <= RATIONAL_MAX_K {
        return Ok(pass_at_k_rational(counts, k)?
            .to_f64()
            .expect("probability fits in f64"));
    }
    check_n_k(counts, 1, k)?;
    let (total, s) = (counts.total, counts.solving);
    if s == 0 {
        return Ok(0.0);
    }
    match (ln_choose(total - s, k), ln_choose(total, k)) {
        (Some(a), Some(b)) => Ok((1.0 - (a - b).exp()).clamp(0.0, 1.0)),
        _ => Ok(1.0),
    }
}

/// Arithmetic mean of per-problem solve probabilities.
pub fn aggregate_solve_rate(per_problem: &[f64]) -> Result<f64, MetricsError> {
    if per_problem.is_empty() {
        return Err(MetricsError::EmptyList);
    }
    Ok(per_problem.iter().sum::<f64>() / per_problem.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(total: u64, e: u64, s: u64) -> EvalCounts {
        EvalCounts::new(total, e, s).unwrap()
    }

    fn ratio(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn counts_invariant_enforced() {
        assert!(EvalCounts::new(10, 5, 6).is_err());
        assert!(EvalCounts::new(10, 11, 0).is_err());
        assert!(EvalCounts::new(10, 10, 10).is_ok());
    }

    #[test]
    fn nothing_passes_filter_means_zero() {
        for n in 1..4 {
            for k in 1..=4 {
                assert_eq!(n_at_k_exact(&counts(4, 0, 0), n, k).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn worked_example_is_five_twelfths() {
        let got = n_at_k_exact_rational(&counts(4, 2, 1), 1, 2).unwrap();
        assert_eq!(got, ratio(5, 12));
        let f = n_at_k_exact(&counts(4, 2, 1), 1, 2).unwrap();
        assert!((f - 5.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn full_submission_equals_pass_at_k() {
        // n = k = K with a vacuous filter reduces to pass@K.
        for s in 0..=4u64 {
            let c = counts(4, 4, s);
            let nk = n_at_k_exact_rational(&c, 4, 4).unwrap();
            let pk = pass_at_k_rational(&c, 4).unwrap();
            assert_eq!(nk, pk);
            let expected = if s > 0 {
                BigRational::one()
            } else {
                BigRational::zero()
            };
            assert_eq!(pk, expected);
        }
    }

    #[test]
    fn pass_at_k_worked_example() {
        let got = pass_at_k_rational(&counts(10, 10, 3), 2).unwrap();
        assert_eq!(got, ratio(8, 15));
    }

    #[test]
    fn filtering_vacuous_matches_pass_at_k_for_all_n_equals_k() {
        for total in 1..=8u64 {
            for s in 0..=total {
                for k in 1..=total {
                    let c = counts(total, total, s);
                    assert_eq!(
                        n_at_k_exact_rational(&c, k, k).unwrap(),
                        pass_at_k_rational(&c, k).unwrap(),
                        "K={total} s={s} k={k}"
                    );
                }
            }
        }
    }

    #[test]
    fn monotone_in_n_and_s_and_bounded_by_pass_at_k() {
        for total in 1..=6u64 {
            for e in 0..=total {
                for s in 0..=e {
                    for k in 1..=total {
                        let c = counts(total, e, s);
                        let pk = pass_at_k(&c, k).unwrap();
                        let mut prev = 0.0;
                        for n in 1..=k {
                            let v = n_at_k_exact(&c, n, k).unwrap();
                            assert!(v >= prev - 1e-12, "not monotone in n");
                            assert!(v <= pk + 1e-12, "n@k exceeds pass@k");
                            assert!((0.0..=1.0).contains(&v));
                            prev = v;
                        }
                        if s < e {
                            let more = counts(total, e, s + 1);
                            assert!(
                                n_at_k_exact(&more, 1, k).unwrap()
                                    >= n_at_k_exact(&c, 1, k).unwrap() - 1e-12,
                                "not monotone in s"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn log_space_path_agrees_with_rational_path() {
        for (total, e, s, n, k) in [
            (256u64, 40u64, 11u64, 5u64, 64u64),
            (200, 200, 7, 3, 50),
            (128, 3, 2, 2, 128),
            (100, 60, 0, 1, 10),
        ] {
            let c = counts(total, e, s);
            let rational = n_at_k_exact_rational(&c, n, k).unwrap().to_f64().unwrap();
            let log_space = n_at_k_log_space(&c, n, k).unwrap();
            assert!(
                (rational - log_space).abs() < 1e-10,
                "K={total} e={e} s={s} n={n} k={k}: {rational} vs {log_space}"
            );
        }
    }

    #[test]
    fn large_k_path_is_fast_and_sane() {
        let c = counts(1_000_000, 10_000, 500);
        let v = n_at_k_exact(&c, 10, 100_000).unwrap();
        assert!((0.0..=1.0).contains(&v));
        let p = pass_at_k(&c, 1000).unwrap();
        assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn monte_carlo_all_solving_is_one() {
        for (n, k) in [(1, 1), (2, 3), (3, 3)] {
            let v = n_at_k_monte_carlo(&counts(3, 3, 3), n, k, 100, 9).unwrap();
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn monte_carlo_converges_to_exact() {
        let c = counts(4, 2, 1);
        let exact = 5.0 / 12.0;
        let mc = n_at_k_monte_carlo(&c, 1, 2, 1_000_000, 1234).unwrap();
        assert!((mc - exact).abs() < 0.002, "mc={mc}");
    }

    #[test]
    fn monte_carlo_is_deterministic_per_seed() {
        let c = counts(20, 9, 4);
        let a = n_at_k_monte_carlo(&c, 3, 10, 10_000, 77).unwrap();
        let b = n_at_k_monte_carlo(&c, 3, 10, 10_000, 77).unwrap();
        let other = n_at_k_monte_carlo(&c, 3, 10, 10_000, 78).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_ne!(a.to_bits(), other.to_bits());
    }

    #[test]
    fn aggregate_is_the_mean() {
        assert_eq!(aggregate_solve_rate(&[0.0, 1.0]).unwrap(), 0.5);
        assert_eq!(aggregate_solve_rate(&[0.25]).unwrap(), 0.25);
        assert_eq!(aggregate_solve_rate(&vec![0.0; 117]).unwrap(), 0.0);
        assert!(matches!(
            aggregate_solve_rate(&[]),
            Err(MetricsError::EmptyList)
        ));
    }

    #[test]
    fn domain_errors_are_rejected() {
        let c = counts(4, 2, 1);
        assert!(n_at_k_exact(&c, 0, 2).is_err());
        assert!(n_at_k_exact(&c, 1, 0).is_err());
        assert!(n_at_k_exact(&c, 1, 5).is_err());
        assert!(n_at_k_monte_carlo(&c, 1, 2, 0, 0).is_err());
        assert!(pass_at_k(&c, 9).is_err());
    }
}
