//! Permissive output judging.
//!
//! Program output is compared token-by-token: whitespace runs separate
//! tokens, numeric tokens compare within an absolute tolerance, and word
//! tokens compare case-insensitively. A solution's verdict aggregates
//! per-test judgments, with the first failing test reported.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Solution, TestCase};
use crate::runner::{
    CompileFailure, CompiledProgram, ExecPool, ExecStatus, ExecutionResult, ResourceLimits, Runner,
    RunnerError,
};

pub const DEFAULT_FLOAT_TOL: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("no tests to judge against")]
    EmptyTests,
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error(transparent)]
    Runner(#[from] RunnerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Accepted,
    WrongAnswer,
    TimeLimit,
    MemoryLimit,
    RuntimeError,
    CompileError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failing_test_index: Option<usize>,
    #[serde(default)]
    pub detail: String,
}

impl Verdict {
    pub fn accepted() -> Self {
        Self {
            kind: VerdictKind::Accepted,
            failing_test_index: None,
            detail: String::new(),
        }
    }

    pub fn failure(kind: VerdictKind, index: Option<usize>, detail: impl Into<String>) -> Self {
        debug_assert!(kind != VerdictKind::Accepted);
        Self {
            kind,
            failing_test_index: index,
            detail: detail.into(),
        }
    }

    pub fn is_accepted(&self) -> bool {
        self.kind == VerdictKind::Accepted
    }
}

/// One `{problem_id, sample_id, kind, failing_test_index?, cpu_time_used,
/// detail}` verdict line.
///
/// `cpu_time_used` in records is deliberately coarse so record files are
/// byte-reproducible across runs: time-limit verdicts report the limit
/// itself, everything else the measured total floored to whole seconds.
/// Full-precision timings are available on
/// [`crate::runner::ExecutionResult`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub problem_id: String,
    pub sample_id: String,
    pub kind: VerdictKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failing_test_index: Option<usize>,
    pub cpu_time_used: f64,
    pub detail: String,
}

impl VerdictRecord {
    /// Reproducible CPU value for a record.
    pub fn record_cpu(kind: VerdictKind, measured_total: f64, cpu_limit: f64) -> f64 {
        if kind == VerdictKind::TimeLimit {
            cpu_limit
        } else {
            measured_total.floor()
        }
    }
}

/// One normalized output token.
#[derive(Debug, Clone, PartialEq)]
pub enum Token {
    /// Token parseable as a finite decimal number.
    Number(f64),
    /// Anything else, lowercased.
    Word(String),
}

impl Token {
    fn render(&self) -> String {
        match self {
            Token::Number(x) => format!("{x}"),
            Token::Word(w) => w.clone(),
        }
    }
}

/// Whitespace-split, case-folded, number-parsed view of a program output.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NormalizedOutput {
    pub tokens: Vec<Token>,
}

impl NormalizedOutput {
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Canonical single-line rendering; normalizing it again yields an equal
    /// token list.
    pub fn canonical_text(&self) -> String {
        self.tokens
            .iter()
            .map(Token::render)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Split on whitespace and classify tokens. Tokens parseable as finite
/// decimal numbers (optional sign, decimal point, exponent) become numbers;
/// values that overflow to infinity or parse as NaN fall back to words.
pub fn normalize_output(raw: &str) -> NormalizedOutput {
    let tokens = raw
        .split_whitespace()
        .map(|tok| match tok.parse::<f64>() {
            Ok(x) if x.is_finite() => Token::Number(x),
            _ => Token::Word(tok.to_lowercase()),
        })
        .collect();
    NormalizedOutput { tokens }
}

/// Positional token comparison: numbers within `float_tol` (absolute), words
/// by equality, and mixed kinds only when the word equals the number's exact
/// rendering.
pub fn outputs_equivalent(a: &NormalizedOutput, b: &NormalizedOutput, float_tol: f64) -> bool {
    if a.tokens.len() != b.tokens.len() {
        return false;
    }
    a.tokens.iter().zip(&b.tokens).all(|(x, y)| match (x, y) {
        (Token::Number(a), Token::Number(b)) => (a - b).abs() < float_tol,
        (Token::Word(a), Token::Word(b)) => a == b,
        (Token::Number(n), Token::Word(w)) | (Token::Word(w), Token::Number(n)) => {
            *w == format!("{n}").to_lowercase()
        }
    })
}

/// What a test accepts as correct output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expected {
    /// The single canonical output.
    Single(String),
    /// Any of several outputs (used only when explicitly enabled; increases
    /// false positives).
    AnyOf(Vec<String>),
}

impl Expected {
    fn matches(&self, got: &NormalizedOutput, float_tol: f64) -> bool {
        match self {
            Expected::Single(text) => outputs_equivalent(got, &normalize_output(text), float_tol),
            Expected::AnyOf(texts) => texts
                .iter()
                .any(|t| outputs_equivalent(got, &normalize_output(t), float_tol)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct JudgeConfig {
    pub float_tol: f64,
    /// Accept any output a labeled-correct human solution produced, instead
    /// of only the canonical majority output. Off by default.
    pub accept_any_human_output: bool,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        Self {
            float_tol: DEFAULT_FLOAT_TOL,
            accept_any_human_output: false,
        }
    }
}

/// Map one execution result against one expected output.
pub fn judge_run(result: &ExecutionResult, expected: &str, float_tol: f64) -> VerdictKind {
    judge_run_expected(result, &Expected::Single(expected.to_string()), float_tol)
}

pub fn judge_run_expected(
    result: &ExecutionResult,
    expected: &Expected,
    float_tol: f64,
) -> VerdictKind {
    match result.status {
        ExecStatus::Timeout => VerdictKind::TimeLimit,
        ExecStatus::MemoryExceeded => VerdictKind::MemoryLimit,
        ExecStatus::NonzeroExit | ExecStatus::Signal => VerdictKind::RuntimeError,
        // A truncated output exceeded the capture cap; it cannot be verified
        // against any bounded expected output.
        ExecStatus::OutputTruncated => VerdictKind::WrongAnswer,
        ExecStatus::Ok => {
            if expected.matches(&normalize_output(&result.stdout), float_tol) {
                VerdictKind::Accepted
            } else {
                VerdictKind::WrongAnswer
            }
        }
    }
}

/// Judge a compiled program against a test list: accepted iff every test is
/// accepted, otherwise the kind and index of the lowest failing test.
pub fn judge_compiled(
    pool: &ExecPool,
    program: &CompiledProgram,
    tests: &[TestCase],
    limits: &ResourceLimits,
    cfg: &JudgeConfig,
) -> Result<Verdict, JudgeError> {
    let expected: Vec<Expected> = tests
        .iter()
        .map(|t| Expected::Single(t.output.clone()))
        .collect();
    judge_compiled_expected(pool, program, tests, &expected, limits, cfg)
}

pub fn judge_compiled_expected(
    pool: &ExecPool,
    program: &CompiledProgram,
    tests: &[TestCase],
    expected: &[Expected],
    limits: &ResourceLimits,
    cfg: &JudgeConfig,
) -> Result<Verdict, JudgeError> {
    Ok(judge_compiled_timed(pool, program, tests, expected, limits, cfg)?.0)
}

/// Like [`judge_compiled_expected`], also returning the total CPU seconds
/// spent across the judged tests.
pub fn judge_compiled_timed(
    pool: &ExecPool,
    program: &CompiledProgram,
    tests: &[TestCase],
    expected: &[Expected],
    limits: &ResourceLimits,
    cfg: &JudgeConfig,
) -> Result<(Verdict, f64), JudgeError> {
    if tests.is_empty() {
        return Err(JudgeError::EmptyTests);
    }
    let inputs: Vec<&str> = tests.iter().map(|t| t.input.as_str()).collect();
    let results = pool.run_suite(program, &inputs, limits)?;
    let cpu_total = results.iter().map(|r| r.cpu_time_used).sum();
    for (i, result) in results.iter().enumerate() {
        let kind = judge_run_expected(result, &expected[i], cfg.float_tol);
        if kind != VerdictKind::Accepted {
            return Ok((
                Verdict::failure(kind, Some(i), format!("first failure on test {i}: {kind:?}")),
                cpu_total,
            ));
        }
    }
    Ok((Verdict::accepted(), cpu_total))
}

/// Compile and judge a source solution; compile failures short-circuit to a
/// compile-error verdict.
pub fn judge_solution(
    runner: &Runner,
    pool: &ExecPool,
    solution: &Solution,
    tests: &[TestCase],
    limits: &ResourceLimits,
    cfg: &JudgeConfig,
) -> Result<Verdict, JudgeError> {
    Ok(judge_solution_timed(runner, pool, solution, tests, limits, cfg)?.0)
}

/// [`judge_solution`] plus the total CPU seconds spent on the tests.
pub fn judge_solution_timed(
    runner: &Runner,
    pool: &ExecPool,
    solution: &Solution,
    tests: &[TestCase],
    limits: &ResourceLimits,
    cfg: &JudgeConfig,
) -> Result<(Verdict, f64), JudgeError> {
    if tests.is_empty() {
        return Err(JudgeError::EmptyTests);
    }
    let program = match runner.compile(solution, limits) {
        Ok(p) => p,
        Err(CompileFailure::Rejected { log }) => {
            return Ok((Verdict::failure(VerdictKind::CompileError, None, log), 0.0));
        }
        Err(CompileFailure::Timeout) => {
            return Ok((
                Verdict::failure(VerdictKind::CompileError, None, "compilation timed out"),
                0.0,
            ));
        }
        Err(CompileFailure::Setup(e)) => return Err(e.into()),
    };
    let expected: Vec<Expected> = tests
        .iter()
        .map(|t| Expected::Single(t.output.clone()))
        .collect();
    judge_compiled_timed(pool, &program, tests, &expected, limits, cfg)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiOutputReport {
    pub multi: bool,
    /// Per test, the canonical (majority) output in normalized rendering.
    pub canonical: Vec<String>,
}

/// Decide whether a problem admits multiple correct outputs, from the
/// normalized outputs of labeled-correct solutions on each test.
///
/// A problem is multiple-output if any test has at least 5 distinct outputs,
/// or at least 2 distinct outputs that were each produced by 2 or more
/// solutions. The canonical output per test is the majority output, ties
/// broken by earliest first occurrence.
pub fn detect_multiple_output(
    per_test_outputs: &[Vec<NormalizedOutput>],
) -> Result<MultiOutputReport, JudgeError> {
    if per_test_outputs.is_empty() {
        return Err(JudgeError::EmptyInput("no tests provided".into()));
    }
    let mut multi = false;
    let mut canonical = Vec::with_capacity(per_test_outputs.len());
    for (ti, outputs) in per_test_outputs.iter().enumerate() {
        if outputs.is_empty() {
            return Err(JudgeError::EmptyInput(format!(
                "no solution outputs for test {ti}"
            )));
        }
        // Count multiplicities keyed by canonical text, first-seen order.
        let mut order: Vec<(String, usize)> = Vec::new();
        for o in outputs {
            let key = o.canonical_text();
            match order.iter_mut().find(|(k, _)| *k == key) {
                Some((_, count)) => *count += 1,
                None => order.push((key, 1)),
            }
        }
        let distinct = order.len();
        let repeated = order.iter().filter(|(_, c)| *c >= 2).count();
        if distinct >= 5 || repeated >= 2 {
            multi = true;
        }
        // Majority output; on ties the earliest-seen entry wins, so only a
        // strictly greater count replaces the running best.
        let mut best = &order[0];
        for entry in &order[1..] {
            if entry.1 > best.1 {
                best = entry;
            }
        }
        canonical.push(best.0.clone());
    }
    Ok(MultiOutputReport { multi, canonical })
}

/// Build the per-test expected outputs a judging pass should use, honoring
/// the accept-any-human-output escape hatch.
pub fn choose_expected(
    per_test_outputs: &[Vec<NormalizedOutput>],
    cfg: &JudgeConfig,
) -> Result<Vec<Expected>, JudgeError> {
    let report = detect_multiple_output(per_test_outputs)?;
    if cfg.accept_any_human_output {
        Ok(per_test_outputs
            .iter()
            .map(|outputs| {
                let mut seen = Vec::new();
                for o in outputs {
                    let text = o.canonical_text();
                    if !seen.contains(&text) {
                        seen.push(text);
                    }
                }
                Expected::AnyOf(seen)
            })
            .collect())
    } else {
        Ok(report.canonical.into_iter().map(Expected::Single).collect())
    }
}
