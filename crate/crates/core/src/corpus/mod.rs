//! Problem/solution data model and dataset hygiene: deduplication,
//! execution-based cleaning, coverage filtering, temporal-split validation,
//! and copying (longest-common-substring) analysis.
//!
//! All operations here are pure transformations over immutable inputs;
//! nothing in this module executes programs. Execution-derived facts are
//! passed in as precomputed [`ExecObservation`]s.

mod clean;
pub mod io;
mod lcs;
mod split;

pub use clean::{clean_by_execution, CleanReport, ExecObservation, ExecResults};
pub use lcs::{lcs_against_corpus, LcsMatch};
pub use split::{validate_temporal_split, TemporalReport, TemporalViolation};

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_RATING: i32 = 800;
pub const MAX_RATING: i32 = 3500;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate problem id {0:?} in dataset")]
    DuplicateProblemId(String),
    #[error("solutions reference unknown problem id {0:?}")]
    UnknownProblemId(String),
    #[error("problem {id:?}: {reason}")]
    InvalidProblem { id: String, reason: String },
    #[error("missing execution result for problem {problem_id:?} solution #{solution_index} on {section:?} test #{test_index}")]
    MissingResult {
        problem_id: String,
        solution_index: usize,
        section: TestSection,
        test_index: usize,
    },
    #[error("release_date missing for problems: {}", ids.join(", "))]
    MissingDates { ids: Vec<String> },
    #[error("corpus is empty")]
    EmptyCorpus,
}

/// One input/expected-output pair.
///
/// Generated tests carry provenance describing how they were produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub input: String,
    pub output: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub provenance: Option<TestProvenance>,
}

impl TestCase {
    pub fn new(input: impl Into<String>, output: impl Into<String>) -> Self {
        Self {
            input: input.into(),
            output: output.into(),
            provenance: None,
        }
    }
}

/// How a generated test came to be.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestProvenance {
    /// Hash of the input the mutation was applied to.
    pub seed_input_hash: String,
    /// Mutation kind that produced the input.
    pub kind: String,
    /// Number of reference solutions that agreed on the output.
    pub reference_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub statement: String,
    pub example_tests: Vec<TestCase>,
    pub hidden_tests: Vec<TestCase>,
    pub generated_tests: Vec<TestCase>,
    pub time_limit_s: f64,
    pub memory_limit_bytes: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rating: Option<i32>,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub multi_output: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub release_date: Option<NaiveDate>,
}

impl Problem {
    /// All evaluation-relevant tests in a fixed order:
    /// examples, then hidden, then generated.
    pub fn all_tests(&self) -> impl Iterator<Item = (TestRef, &TestCase)> {
        let ex = self
            .example_tests
            .iter()
            .enumerate()
            .map(|(i, t)| (TestRef::new(TestSection::Example, i), t));
        let hid = self
            .hidden_tests
            .iter()
            .enumerate()
            .map(|(i, t)| (TestRef::new(TestSection::Hidden, i), t));
        let gen = self
            .generated_tests
            .iter()
            .enumerate()
            .map(|(i, t)| (TestRef::new(TestSection::Generated, i), t));
        ex.chain(hid).chain(gen)
    }

    /// Hidden plus generated tests: the set a submission is graded on.
    pub fn evaluation_tests(&self) -> Vec<TestCase> {
        let mut out = self.hidden_tests.clone();
        out.extend(self.generated_tests.iter().cloned());
        out
    }

    fn validate(&self) -> Result<(), CorpusError> {
        if let Some(r) = self.rating {
            if !(MIN_RATING..=MAX_RATING).contains(&r) {
                return Err(CorpusError::InvalidProblem {
                    id: self.id.clone(),
                    reason: format!("rating {r} outside [{MIN_RATING}, {MAX_RATING}]"),
                });
            }
        }
        if !self.time_limit_s.is_finite() || self.time_limit_s <= 0.0 {
            return Err(CorpusError::InvalidProblem {
                id: self.id.clone(),
                reason: "time_limit_s must be > 0".into(),
            });
        }
        if self.memory_limit_bytes == 0 {
            return Err(CorpusError::InvalidProblem {
                id: self.id.clone(),
                reason: "memory_limit_bytes must be > 0".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub language: String,
    pub source: String,
    #[serde(default)]
    pub labeled_correct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    Train,
    Valid,
    Test,
}

/// Which test list of a problem a test belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestSection {
    Example,
    Hidden,
    Generated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TestRef {
    pub section: TestSection,
    pub index: usize,
}

impl TestRef {
    pub fn new(section: TestSection, index: usize) -> Self {
        Self { section, index }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub problems: Vec<Problem>,
    /// problem id -> solutions, in stable input order.
    pub solutions: BTreeMap<String, Vec<Solution>>,
    pub split: SplitKind,
}

impl Dataset {
    pub fn new(split: SplitKind) -> Self {
        Self {
            problems: Vec::new(),
            solutions: BTreeMap::new(),
            split,
        }
    }

    /// Check the structural invariants: unique problem ids, solution keys
    /// referencing existing problems, per-problem field validity.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut seen = std::collections::HashSet::new();
        for p in &self.problems {
            if !seen.insert(p.id.as_str()) {
                return Err(CorpusError::DuplicateProblemId(p.id.clone()));
            }
            p.validate()?;
        }
        for id in self.solutions.keys() {
            if !seen.contains(id.as_str()) {
                return Err(CorpusError::UnknownProblemId(id.clone()));
            }
        }
        Ok(())
    }

    pub fn solutions_for(&self, problem_id: &str) -> &[Solution] {
        self.solutions
            .get(problem_id)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

/// Remove all whitespace; the comparison key for duplicate detection.
pub(crate) fn strip_whitespace(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

/// Merge problems whose statements are equal ignoring whitespace.
///
/// The retained problem of each duplicate group is the one with the earliest
/// release date (missing dates sort last), ties broken by smallest id. The
/// solutions of all group members are merged onto it in that same order.
pub fn dedup_problems(d: &Dataset) -> Dataset {
    use std::collections::HashMap;

    let mut groups: HashMap<String, Vec<usize>> = HashMap::new();
    let mut group_order = Vec::new();
    for (i, p) in d.problems.iter().enumerate() {
        let key = strip_whitespace(&p.statement);
        let entry = groups.entry(key.clone()).or_insert_with(|| {
            group_order.push(key);
            Vec::new()
        });
        entry.push(i);
    }

    let mut retained_of_group: HashMap<usize, Vec<usize>> = HashMap::new();
    for members in groups.values() {
        let mut ordered = members.clone();
        ordered.sort_by(|&a, &b| {
            let pa = &d.problems[a];
            let pb = &d.problems[b];
            // None dates sort after any concrete date.
            let da = (pa.release_date.is_none(), pa.release_date, &pa.id);
            let db = (pb.release_date.is_none(), pb.release_date, &pb.id);
            da.cmp(&db)
        });
        retained_of_group.insert(ordered[0], ordered);
    }

    let mut out = Dataset::new(d.split);
    for (i, p) in d.problems.iter().enumerate() {
        if let Some(ordered) = retained_of_group.get(&i) {
            out.problems.push(p.clone());
            let mut merged = Vec::new();
            for &j in ordered {
                merged.extend(d.solutions_for(&d.problems[j].id).iter().cloned());
            }
            if !merged.is_empty() {
                out.solutions.insert(p.id.clone(), merged);
            }
        }
    }
    out
}

/// Per problem, drop solutions whose source is a whitespace-insensitive
/// duplicate of an earlier one.
pub fn dedup_solutions(d: &Dataset) -> Dataset {
    let mut out = d.clone();
    for sols in out.solutions.values_mut() {
        let mut seen = std::collections::HashSet::new();
        sols.retain(|s| seen.insert(strip_whitespace(&s.source)));
    }
    out
}

/// Keep only problems with enough discriminating tests: at least 5 hidden or
/// generated tests whose expected outputs (after judge normalization) take
/// at least 2 distinct values.
pub fn filter_low_coverage_problems(d: &Dataset) -> Dataset {
    let mut out = Dataset::new(d.split);
    for p in &d.problems {
        let tests: Vec<&TestCase> = p.hidden_tests.iter().chain(&p.generated_tests).collect();
        if tests.len() < 5 {
            continue;
        }
        let distinct: std::collections::HashSet<String> = tests
            .iter()
            .map(|t| crate::judge::normalize_output(&t.output).canonical_text())
            .collect();
        if distinct.len() < 2 {
            continue;
        }
        out.problems.push(p.clone());
        if let Some(sols) = d.solutions.get(&p.id) {
            out.solutions.insert(p.id.clone(), sols.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(id: &str, statement: &str, date: Option<&str>) -> Problem {
        Problem {
            id: id.into(),
            statement: statement.into(),
            example_tests: vec![],
            hidden_tests: vec![],
            generated_tests: vec![],
            time_limit_s: 2.0,
            memory_limit_bytes: 256 << 20,
            rating: None,
            tags: vec![],
            multi_output: false,
            release_date: date.map(|d| d.parse().unwrap()),
        }
    }

    fn solution(src: &str) -> Solution {
        Solution {
            language: "python".into(),
            source: src.into(),
            labeled_correct: true,
        }
    }

    #[test]
    fn dedup_problems_merges_whitespace_equal_statements() {
        let mut d = Dataset::new(SplitKind::Train);
        d.problems.push(problem("p1", "a b", Some("2021-01-01")));
        d.problems.push(problem("p2", "ab", Some("2021-02-01")));
        d.solutions.insert("p1".into(), vec![solution("x=1")]);
        d.solutions.insert("p2".into(), vec![solution("y=2")]);

        let out = dedup_problems(&d);
        assert_eq!(out.problems.len(), 1);
        assert_eq!(out.problems[0].id, "p1");
        assert_eq!(out.solutions_for("p1").len(), 2);
    }

    #[test]
    fn dedup_problems_distinct_statements_unchanged() {
        let mut d = Dataset::new(SplitKind::Train);
        d.problems.push(problem("p1", "alpha", None));
        d.problems.push(problem("p2", "beta", None));
        let out = dedup_problems(&d);
        assert_eq!(out.problems.len(), 2);
    }

    #[test]
    fn dedup_problems_merges_three_way_duplicates() {
        let mut d = Dataset::new(SplitKind::Train);
        d.problems.push(problem("p1", "s t", Some("2021-03-01")));
        d.problems.push(problem("p2", "st", Some("2021-01-01")));
        d.problems.push(problem("p3", "s  t", Some("2021-02-01")));
        d.solutions.insert("p1".into(), vec![solution("a")]);
        d.solutions
            .insert("p2".into(), vec![solution("b"), solution("c")]);
        d.solutions.insert(
            "p3".into(),
            vec![solution("d"), solution("e"), solution("f")],
        );

        let out = dedup_problems(&d);
        assert_eq!(out.problems.len(), 1);
        // Earliest release date wins.
        assert_eq!(out.problems[0].id, "p2");
        let merged = out.solutions_for("p2");
        assert_eq!(merged.len(), 6);
        // Merge order follows (date, id) of source problems: p2, p3, p1.
        let sources: Vec<&str> = merged.iter().map(|s| s.source.as_str()).collect();
        assert_eq!(sources, ["b", "c", "d", "e", "f", "a"]);
    }

    #[test]
    fn dedup_solutions_is_per_problem_and_stable() {
        let mut d = Dataset::new(SplitKind::Train);
        d.problems.push(problem("p1", "one", None));
        d.problems.push(problem("p2", "two", None));
        d.solutions
            .insert("p1".into(), vec![solution("x=1"), solution("x = 1")]);
        d.solutions.insert("p2".into(), vec![solution("x=1")]);

        let out = dedup_solutions(&d);
        assert_eq!(out.solutions_for("p1").len(), 1);
        assert_eq!(out.solutions_for("p1")[0].source, "x=1");
        // Identical sources under different problems are both kept.
        assert_eq!(out.solutions_for("p2").len(), 1);
    }

    #[test]
    fn dedup_solutions_empty_list() {
        let mut d = Dataset::new(SplitKind::Train);
        d.problems.push(problem("p1", "one", None));
        d.solutions.insert("p1".into(), vec![]);
        let out = dedup_solutions(&d);
        assert!(out.solutions_for("p1").is_empty());
    }

    #[test]
    fn dedup_ops_are_idempotent() {
        let mut d = Dataset::new(SplitKind::Train);
        d.problems.push(problem("p1", "a b", Some("2021-01-01")));
        d.problems.push(problem("p2", "ab", Some("2021-02-01")));
        d.problems.push(problem("p3", "other", None));
        d.solutions
            .insert("p1".into(), vec![solution("x=1"), solution("x =1")]);
        d.solutions.insert("p2".into(), vec![solution("x=1")]);

        let once = dedup_solutions(&dedup_problems(&d));
        let twice = dedup_solutions(&dedup_problems(&once));
        assert_eq!(
            serde_json::to_string(&once).unwrap(),
            serde_json::to_string(&twice).unwrap()
        );
    }

    #[test]
    fn low_coverage_filter_applies_both_clauses() {
        let mut d = Dataset::new(SplitKind::Valid);

        let mut constant = problem("const", "always yes", None);
        constant.hidden_tests = (0..6).map(|i| TestCase::new(format!("{i}"), "YES")).collect();

        let mut few = problem("few", "too few tests", None);
        few.hidden_tests = vec![TestCase::new("1", "YES"), TestCase::new("2", "NO")];
        few.generated_tests = vec![TestCase::new("3", "YES"), TestCase::new("4", "NO")];

        let mut good = problem("good", "enough signal", None);
        good.hidden_tests = (0..3).map(|i| TestCase::new(format!("{i}"), "YES")).collect();
        good.generated_tests = (0..2).map(|i| TestCase::new(format!("g{i}"), "NO")).collect();

        d.problems = vec![constant, few, good];
        let out = filter_low_coverage_problems(&d);
        let ids: Vec<&str> = out.problems.iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, ["good"]);
    }

    #[test]
    fn validate_rejects_out_of_range_rating() {
        let mut d = Dataset::new(SplitKind::Train);
        let mut p = problem("p1", "s", None);
        p.rating = Some(100);
        d.problems.push(p);
        assert!(d.validate().is_err());
    }
}
