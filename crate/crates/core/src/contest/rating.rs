//! Rating estimation across a sequence of contests.
//!
//! The update for one contest works on the scoreboard's pre-contest ratings:
//!
//! 1. Expected seed of a rating r against the field:
//!    `seed(r) = 1 + sum_i 1 / (1 + 10^((r - r_i) / 400))`
//!    (one point for each opponent expected to finish ahead).
//! 2. Geometric mean of expectation and reality:
//!    `m = sqrt(seed(r) * achieved_rank)`.
//! 3. Performance rating: the R with `seed(R) = m`, found by bisection
//!    (seed is strictly decreasing in R).
//! 4. New rating: `r + gain * (R - r)` with gain 1/2.
//!
//! Matching one's expected rank is a fixed point: m = seed(r) gives R = r
//! and a zero delta.

use serde::{Deserialize, Serialize};

use super::{ContestError, ScoreboardEntry};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RatingParams {
    pub initial_rating: f64,
    /// Fraction of (performance - current) applied per contest.
    pub gain: f64,
}

impl Default for RatingParams {
    fn default() -> Self {
        Self {
            initial_rating: 1500.0,
            gain: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatingUpdate {
    pub contest_index: usize,
    pub achieved_rank: u32,
    pub expected_seed: f64,
    pub performance: f64,
    pub rating_before: f64,
    pub rating_after: f64,
}

/// Probability that a player rated `a` beats a player rated `b`.
fn win_prob(a: f64, b: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf((b - a) / 400.0))
}

/// Expected 1-based rank of rating `r` against the field.
fn expected_seed(field: &[f64], r: f64) -> f64 {
    1.0 + field.iter().map(|&ri| win_prob(ri, r)).sum::<f64>()
}

/// Invert `expected_seed` by bisection.
fn performance_rating(field: &[f64], target_seed: f64) -> f64 {
    let (mut lo, mut hi) = (-10_000.0_f64, 12_000.0_f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if expected_seed(field, mid) > target_seed {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Sequential rating estimate over contests, starting from the configured
/// initial rating. Each contest needs the scoreboard (with `rating_before`
/// for every entry) and the achieved 1-based rank.
pub fn estimate_rating(
    placements: &[(Vec<ScoreboardEntry>, u32)],
    params: &RatingParams,
) -> Result<Vec<RatingUpdate>, ContestError> {
    let mut rating = params.initial_rating;
    let mut trajectory = Vec::with_capacity(placements.len());
    for (idx, (scoreboard, achieved_rank)) in placements.iter().enumerate() {
        if scoreboard.is_empty() {
            return Err(ContestError::EmptyScoreboard);
        }
        let mut field = Vec::with_capacity(scoreboard.len());
        for entry in scoreboard {
            let r = entry
                .rating_before
                .ok_or_else(|| ContestError::MissingRating(entry.participant_id.clone()))?;
            field.push(r as f64);
        }
        let seed = expected_seed(&field, rating);
        let mean_rank = (seed * *achieved_rank as f64).sqrt();
        let performance = performance_rating(&field, mean_rank);
        let after = rating + params.gain * (performance - rating);
        trajectory.push(RatingUpdate {
            contest_index: idx,
            achieved_rank: *achieved_rank,
            expected_seed: seed,
            performance,
            rating_before: rating,
            rating_after: after,
        });
        rating = after;
    }
    Ok(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn board(ratings: &[i32]) -> Vec<ScoreboardEntry> {
        ratings
            .iter()
            .enumerate()
            .map(|(i, &r)| ScoreboardEntry {
                participant_id: format!("u{i}"),
                score: 0.0,
                rank: (i + 1) as u32,
                rating_before: Some(r),
            })
            .collect()
    }

    #[test]
    fn matching_expected_rank_is_a_fixed_point() {
        let field = board(&[1500, 1500, 1500]);
        // Against three equals, seed(1500) = 1 + 3*0.5 = 2.5; there is no
        // integer rank 2.5, so probe the fixed point directly.
        let ratings: Vec<f64> = field.iter().map(|e| e.rating_before.unwrap() as f64).collect();
        let seed = expected_seed(&ratings, 1500.0);
        assert!((seed - 2.5).abs() < 1e-12);
        let perf = performance_rating(&ratings, seed);
        assert!((perf - 1500.0).abs() < 1e-6);
    }

    #[test]
    fn always_first_in_strong_field_increases() {
        let placements: Vec<(Vec<ScoreboardEntry>, u32)> = (0..5)
            .map(|_| (board(&[2100, 2000, 1900, 1800]), 1u32))
            .collect();
        let traj = estimate_rating(&placements, &RatingParams::default()).unwrap();
        for update in &traj {
            assert!(
                update.rating_after > update.rating_before,
                "rating must strictly increase: {update:?}"
            );
        }
    }

    #[test]
    fn last_place_decreases() {
        let placements = vec![(board(&[1200, 1100, 1000]), 4u32)];
        let traj = estimate_rating(&placements, &RatingParams::default()).unwrap();
        assert!(traj[0].rating_after < traj[0].rating_before);
    }

    #[test]
    fn invariant_to_scoreboard_order() {
        let forward = board(&[2400, 1700, 1950, 1300, 2050]);
        let mut reversed = forward.clone();
        reversed.reverse();
        let a = estimate_rating(&[(forward, 2)], &RatingParams::default()).unwrap();
        let b = estimate_rating(&[(reversed, 2)], &RatingParams::default()).unwrap();
        assert!((a[0].rating_after - b[0].rating_after).abs() < 1e-9);
    }

    #[test]
    fn missing_rating_is_an_error() {
        let mut b = board(&[1500]);
        b[0].rating_before = None;
        assert!(matches!(
            estimate_rating(&[(b, 1)], &RatingParams::default()),
            Err(ContestError::MissingRating(_))
        ));
    }
}
