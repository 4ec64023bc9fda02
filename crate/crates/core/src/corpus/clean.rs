//! Execution-based dataset cleaning.
//!
//! The cleaning rules consume precomputed per-(solution, test) observations;
//! no programs run here.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{CorpusError, Dataset, Problem, TestRef, TestSection};

/// What one solution did on one test, as far as cleaning cares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecObservation {
    /// Solution was judged accepted on this test.
    pub accepted: bool,
    /// Solution produced at least one non-whitespace byte on stdout.
    pub nonempty_output: bool,
}

/// Key: (problem id, solution index within that problem, test reference).
pub type ExecResults = HashMap<(String, usize, TestRef), ExecObservation>;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CleanReport {
    pub solutions_dropped_no_pass: usize,
    pub tests_dropped_low_output: usize,
    pub solutions_dropped_low_pass: usize,
}

/// Apply the three execution-cleaning steps, in order:
///
/// (a) drop solutions that pass zero tests;
/// (b) drop tests on which fewer than 10% of the remaining solutions produce
///     non-empty output;
/// (c) drop solutions that pass fewer than 10% of the remaining tests.
///
/// Both 10% thresholds are strict less-than comparisons on exact fractions
/// (`10 * count < total`), so a solution sitting exactly at 10% is kept.
pub fn clean_by_execution(
    d: &Dataset,
    results: &ExecResults,
) -> Result<(Dataset, CleanReport), CorpusError> {
    let mut out = Dataset::new(d.split);
    let mut report = CleanReport::default();

    for p in &d.problems {
        let sols = d.solutions_for(&p.id);
        let tests: Vec<TestRef> = p.all_tests().map(|(r, _)| r).collect();

        let lookup = |sol_idx: usize, test: TestRef| -> Result<ExecObservation, CorpusError> {
            results
                .get(&(p.id.clone(), sol_idx, test))
                .copied()
                .ok_or(CorpusError::MissingResult {
                    problem_id: p.id.clone(),
                    solution_index: sol_idx,
                    section: test.section,
                    test_index: test.index,
                })
        };

        // (a) solutions passing no tests
        let mut kept_sols: Vec<usize> = Vec::new();
        for (si, _) in sols.iter().enumerate() {
            let mut passes_any = false;
            for &t in &tests {
                if lookup(si, t)?.accepted {
                    passes_any = true;
                }
            }
            if passes_any {
                kept_sols.push(si);
            } else {
                report.solutions_dropped_no_pass += 1;
            }
        }

        // (b) tests with too few non-empty outputs among remaining solutions
        let mut kept_tests: Vec<TestRef> = Vec::new();
        for &t in &tests {
            let producing = kept_sols
                .iter()
                .filter(|&&si| lookup(si, t).map(|o| o.nonempty_output).unwrap_or(false))
                .count();
            if 10 * producing < kept_sols.len() {
                report.tests_dropped_low_output += 1;
            } else {
                kept_tests.push(t);
            }
        }

        // (c) solutions passing too few of the remaining tests
        let mut final_sols: Vec<usize> = Vec::new();
        for &si in &kept_sols {
            let passed = kept_tests
                .iter()
                .filter(|&&t| lookup(si, t).map(|o| o.accepted).unwrap_or(false))
                .count();
            if 10 * passed < kept_tests.len() {
                report.solutions_dropped_low_pass += 1;
            } else {
                final_sols.push(si);
            }
        }

        let cleaned = rebuild_problem(p, &kept_tests);
        out.problems.push(cleaned);
        let remaining: Vec<_> = final_sols.iter().map(|&si| sols[si].clone()).collect();
        if !remaining.is_empty() {
            out.solutions.insert(p.id.clone(), remaining);
        }
    }

    Ok((out, report))
}

fn rebuild_problem(p: &Problem, kept: &[TestRef]) -> Problem {
    let keep = |section: TestSection, tests: &[super::TestCase]| {
        tests
            .iter()
            .enumerate()
            .filter(|(i, _)| kept.contains(&TestRef::new(section, *i)))
            .map(|(_, t)| t.clone())
            .collect()
    };
    let mut out = p.clone();
    out.example_tests = keep(TestSection::Example, &p.example_tests);
    out.hidden_tests = keep(TestSection::Hidden, &p.hidden_tests);
    out.generated_tests = keep(TestSection::Generated, &p.generated_tests);
    out
}
