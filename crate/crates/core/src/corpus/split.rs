//! Temporal-split validation: all training problems must predate all
//! validation problems, and all validation problems must predate all test
//! problems.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{CorpusError, Dataset, SplitKind};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemporalViolation {
    pub problem_id: String,
    pub split: SplitKind,
    pub release_date: NaiveDate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemporalReport {
    pub pass: bool,
    pub violations: Vec<TemporalViolation>,
}

/// Check the strict temporal ordering train < valid < test on release dates.
///
/// Violations are reported against the later split of each adjacent pair:
/// a valid problem dated on or before the latest train problem, or a test
/// problem dated on or before the latest valid problem. Comparisons involving
/// an empty split pass vacuously.
///
/// Errors if any problem lacks a release date.
pub fn validate_temporal_split(
    train: &Dataset,
    valid: &Dataset,
    test: &Dataset,
) -> Result<TemporalReport, CorpusError> {
    let mut missing = Vec::new();
    for d in [train, valid, test] {
        for p in &d.problems {
            if p.release_date.is_none() {
                missing.push(p.id.clone());
            }
        }
    }
    if !missing.is_empty() {
        return Err(CorpusError::MissingDates { ids: missing });
    }

    let max_date = |d: &Dataset| d.problems.iter().filter_map(|p| p.release_date).max();

    let mut violations = Vec::new();
    let mut check = |earlier_max: Option<NaiveDate>, later: &Dataset, split: SplitKind| {
        if let Some(cutoff) = earlier_max {
            for p in &later.problems {
                let date = p.release_date.expect("checked above");
                if date <= cutoff {
                    violations.push(TemporalViolation {
                        problem_id: p.id.clone(),
                        split,
                        release_date: date,
                    });
                }
            }
        }
    };
    check(max_date(train), valid, SplitKind::Valid);
    check(max_date(valid), test, SplitKind::Test);

    Ok(TemporalReport {
        pass: violations.is_empty(),
        violations,
    })
}
