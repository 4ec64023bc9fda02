//! Mutation-based test generation with reference-solution consensus.
//!
//! New test inputs are produced by small mutations of existing ones (bit
//! flips on binary tokens, integer increments/decrements, character swaps
//! and replacements). A candidate input becomes a test only if every
//! reference solution runs cleanly on it and they all agree on the output;
//! the agreed output becomes the expected output. Disagreement or failure
//! rejects the candidate, which is what weeds out mutations that broke the
//! input format.

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{Problem, TestCase, TestProvenance};
use crate::judge::{normalize_output, outputs_equivalent, JudgeConfig};
use crate::runner::{CompiledProgram, ExecPool, ExecStatus, ResourceLimits, RunnerError};

#[derive(Debug, Error)]
pub enum TestgenError {
    #[error("no reference solutions available")]
    NoReferences,
    #[error("problem has no seed test inputs")]
    NoSeedInputs,
    #[error(transparent)]
    Runner(#[from] RunnerError),
}

/// Generation stops at whichever budget runs out first.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MutationBudget {
    pub max_cpu_seconds: f64,
    pub max_tests: usize,
}

impl MutationBudget {
    /// Desk-scale default; the large preset used for full dataset builds is
    /// 10 CPU hours / 200 tests per problem.
    pub fn desk_default() -> Self {
        Self {
            max_cpu_seconds: 60.0,
            max_tests: 20,
        }
    }

    pub fn full_preset() -> Self {
        Self {
            max_cpu_seconds: 36_000.0,
            max_tests: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationKind {
    BitFlip,
    IntIncrement,
    IntDecrement,
    CharSwap,
    CharReplace,
}

impl MutationKind {
    pub const ALL: [MutationKind; 5] = [
        MutationKind::BitFlip,
        MutationKind::IntIncrement,
        MutationKind::IntDecrement,
        MutationKind::CharSwap,
        MutationKind::CharReplace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MutationKind::BitFlip => "bit_flip",
            MutationKind::IntIncrement => "int_increment",
            MutationKind::IntDecrement => "int_decrement",
            MutationKind::CharSwap => "char_swap",
            MutationKind::CharReplace => "char_replace",
        }
    }
}

/// Why a candidate input was not turned into a test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    /// References produced non-equivalent outputs.
    Disagreement,
    /// A reference crashed or was otherwise not ok.
    ReferenceFailure,
    /// A reference exceeded the time limit.
    Timeout,
}

/// Alternating whitespace/token view of an input that reassembles exactly.
struct TokenizedInput {
    /// (leading whitespace, token) pairs plus trailing whitespace.
    pairs: Vec<(String, String)>,
    trailing: String,
}

impl TokenizedInput {
    fn parse(input: &str) -> Self {
        let mut pairs = Vec::new();
        let mut ws = String::new();
        let mut tok = String::new();
        for c in input.chars() {
            if c.is_whitespace() {
                if tok.is_empty() {
                    ws.push(c);
                } else {
                    pairs.push((std::mem::take(&mut ws), std::mem::take(&mut tok)));
                    ws.push(c);
                }
            } else {
                tok.push(c);
            }
        }
        if tok.is_empty() {
            Self { pairs, trailing: ws }
        } else {
            pairs.push((ws, tok));
            Self {
                pairs,
                trailing: String::new(),
            }
        }
    }

    fn render(&self) -> String {
        let mut out = String::new();
        for (ws, tok) in &self.pairs {
            out.push_str(ws);
            out.push_str(tok);
        }
        out.push_str(&self.trailing);
        out
    }
}

fn is_binary_token(tok: &str) -> bool {
    !tok.is_empty() && tok.chars().all(|c| c == '0' || c == '1')
}

fn is_integer_token(tok: &str) -> bool {
    let digits = tok.strip_prefix('-').unwrap_or(tok);
    !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit())
}

fn eligible(kind: MutationKind, tok: &str) -> bool {
    match kind {
        MutationKind::BitFlip => is_binary_token(tok),
        MutationKind::IntIncrement | MutationKind::IntDecrement => is_integer_token(tok),
        MutationKind::CharSwap => !is_integer_token(tok) && tok.chars().count() >= 2,
        MutationKind::CharReplace => {
            !is_integer_token(tok)
                && tok
                    .chars()
                    .any(|c| c.is_ascii_lowercase() || c.is_ascii_uppercase() || c.is_ascii_digit())
        }
    }
}

fn mutate_token(kind: MutationKind, tok: &str, rng: &mut ChaCha8Rng) -> String {
    let chars: Vec<char> = tok.chars().collect();
    match kind {
        MutationKind::BitFlip => {
            let i = rng.gen_range(0..chars.len());
            let mut out = chars;
            out[i] = if out[i] == '0' { '1' } else { '0' };
            out.into_iter().collect()
        }
        MutationKind::IntIncrement | MutationKind::IntDecrement => {
            let value: BigInt = tok.parse().expect("eligible integer token");
            let delta = BigInt::from(if kind == MutationKind::IntIncrement { 1 } else { -1 });
            (value + delta).to_string()
        }
        MutationKind::CharSwap => {
            let i = rng.gen_range(0..chars.len() - 1);
            let mut out = chars;
            out.swap(i, i + 1);
            out.into_iter().collect()
        }
        MutationKind::CharReplace => {
            let candidates: Vec<usize> = chars
                .iter()
                .enumerate()
                .filter(|(_, c)| {
                    c.is_ascii_lowercase() || c.is_ascii_uppercase() || c.is_ascii_digit()
                })
                .map(|(i, _)| i)
                .collect();
            let i = *candidates.choose(rng).expect("eligible char");
            let old = chars[i];
            let class: &[u8] = if old.is_ascii_lowercase() {
                b"abcdefghijklmnopqrstuvwxyz"
            } else if old.is_ascii_uppercase() {
                b"ABCDEFGHIJKLMNOPQRSTUVWXYZ"
            } else {
                b"0123456789"
            };
            // Same case class, never the original character.
            let replacement = loop {
                let c = class[rng.gen_range(0..class.len())] as char;
                if c != old {
                    break c;
                }
            };
            let mut out = chars;
            out[i] = replacement;
            out.into_iter().collect()
        }
    }
}

/// Apply one mutation of the given kind to a uniformly chosen eligible
/// token. Whitespace structure is preserved. Returns the mutated input and
/// whether anything changed; inputs with no eligible token come back
/// untouched with `false`.
pub fn mutate_input(input: &str, kind: MutationKind, rng: &mut ChaCha8Rng) -> (String, bool) {
    let mut tokens = TokenizedInput::parse(input);
    let eligible_idx: Vec<usize> = tokens
        .pairs
        .iter()
        .enumerate()
        .filter(|(_, (_, tok))| eligible(kind, tok))
        .map(|(i, _)| i)
        .collect();
    let Some(&target) = eligible_idx.as_slice().choose(rng) else {
        return (input.to_string(), false);
    };
    let mutated = mutate_token(kind, &tokens.pairs[target].1, rng);
    tokens.pairs[target].1 = mutated;
    (tokens.render(), true)
}

/// Outcome of consensus verification for one candidate input.
#[derive(Debug)]
pub struct VerifiedCandidate {
    pub test: TestCase,
    /// CPU seconds spent across all reference runs.
    pub cpu_spent: f64,
}

/// Run every reference on the candidate; accept only if all succeed and all
/// normalized outputs are equivalent to the first one. The expected output
/// is the first reference's raw stdout.
pub fn verify_candidate(
    pool: &ExecPool,
    candidate_input: &str,
    references: &[CompiledProgram],
    limits: &ResourceLimits,
    judge_cfg: &JudgeConfig,
) -> Result<Result<VerifiedCandidate, (Rejection, f64)>, TestgenError> {
    if references.is_empty() {
        return Err(TestgenError::NoReferences);
    }
    let results = pool.map(references, |_, program| {
        pool.execute(program, candidate_input, limits)
    });
    let mut cpu_spent = 0.0;
    let mut outputs = Vec::with_capacity(references.len());
    let mut rejection = None;
    for result in results {
        let result = result?;
        cpu_spent += result.cpu_time_used;
        if rejection.is_none() {
            match result.status {
                ExecStatus::Ok => outputs.push(result.stdout),
                ExecStatus::Timeout => rejection = Some(Rejection::Timeout),
                _ => rejection = Some(Rejection::ReferenceFailure),
            }
        }
    }
    if let Some(r) = rejection {
        return Ok(Err((r, cpu_spent)));
    }
    let first = normalize_output(&outputs[0]);
    for other in &outputs[1..] {
        if !outputs_equivalent(&first, &normalize_output(other), judge_cfg.float_tol) {
            return Ok(Err((Rejection::Disagreement, cpu_spent)));
        }
    }
    Ok(Ok(VerifiedCandidate {
        test: TestCase::new(candidate_input, outputs[0].clone()),
        cpu_spent,
    }))
}

/// Tallies of what happened during one generation run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct GenerationReport {
    pub accepted: usize,
    pub rejected_disagreement: usize,
    pub rejected_reference_failure: usize,
    pub rejected_timeout: usize,
    pub rejected_duplicate: usize,
    pub no_op_mutations: usize,
    pub cpu_seconds_spent: f64,
    pub reference_count: usize,
}

fn input_hash(input: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(input.as_bytes());
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Generate verified tests for a problem by mutating its existing inputs
/// (and previously accepted ones). Deterministic given the seed.
///
/// Stops when `budget.max_tests` tests are accepted, the cumulative
/// reference CPU time passes `budget.max_cpu_seconds`, or a bounded number
/// of attempts is exhausted (rigid input formats can reject nearly
/// everything).
pub fn generate_tests(
    problem: &Problem,
    references: &[CompiledProgram],
    pool: &ExecPool,
    budget: &MutationBudget,
    seed: u64,
    judge_cfg: &JudgeConfig,
) -> Result<(Vec<TestCase>, GenerationReport), TestgenError> {
    if references.is_empty() {
        return Err(TestgenError::NoReferences);
    }
    let mut report = GenerationReport {
        reference_count: references.len(),
        ..Default::default()
    };
    let mut seed_inputs: Vec<String> = problem
        .example_tests
        .iter()
        .chain(&problem.hidden_tests)
        .chain(&problem.generated_tests)
        .map(|t| t.input.clone())
        .collect();
    if seed_inputs.is_empty() {
        return Err(TestgenError::NoSeedInputs);
    }
    let mut known: std::collections::HashSet<String> = seed_inputs.iter().cloned().collect();
    let limits = ResourceLimits::for_problem(problem);
    let mut rng = crate::stream_rng(seed, 0x7e57);
    let mut accepted = Vec::new();

    let max_attempts = budget.max_tests.saturating_mul(64).max(64);
    let mut attempts = 0usize;
    while accepted.len() < budget.max_tests
        && report.cpu_seconds_spent < budget.max_cpu_seconds
        && attempts < max_attempts
    {
        attempts += 1;
        let base = seed_inputs[rng.gen_range(0..seed_inputs.len())].clone();
        let applicable: Vec<MutationKind> = {
            let toks = TokenizedInput::parse(&base);
            MutationKind::ALL
                .into_iter()
                .filter(|k| toks.pairs.iter().any(|(_, t)| eligible(*k, t)))
                .collect()
        };
        let Some(&kind) = applicable.as_slice().choose(&mut rng) else {
            report.no_op_mutations += 1;
            continue;
        };
        let (candidate, changed) = mutate_input(&base, kind, &mut rng);
        if !changed {
            report.no_op_mutations += 1;
            continue;
        }
        if !known.insert(candidate.clone()) {
            report.rejected_duplicate += 1;
            continue;
        }
        match verify_candidate(pool, &candidate, references, &limits, judge_cfg)? {
            Ok(verified) => {
                report.cpu_seconds_spent += verified.cpu_spent;
                let mut test = verified.test;
                test.provenance = Some(TestProvenance {
                    seed_input_hash: input_hash(&base),
                    kind: kind.name().to_string(),
                    reference_count: references.len(),
                });
                seed_inputs.push(test.input.clone());
                accepted.push(test);
                report.accepted += 1;
            }
            Err((rejection, cpu)) => {
                report.cpu_seconds_spent += cpu;
                match rejection {
                    Rejection::Disagreement => report.rejected_disagreement += 1,
                    Rejection::ReferenceFailure => report.rejected_reference_failure += 1,
                    Rejection::Timeout => report.rejected_timeout += 1,
                }
            }
        }
    }
    Ok((accepted, report))
}

/// Unverified probe inputs for behavioral clustering: the same mutation
/// machinery without the consensus requirement, so even invalid inputs are
/// produced (they still separate programs by behavior).
pub fn generate_probe_inputs(problem: &Problem, count: usize, seed: u64) -> Vec<String> {
    let seed_inputs: Vec<String> = problem
        .example_tests
        .iter()
        .chain(&problem.hidden_tests)
        .chain(&problem.generated_tests)
        .map(|t| t.input.clone())
        .collect();
    if seed_inputs.is_empty() {
        return Vec::new();
    }
    let mut rng = crate::stream_rng(seed, 0x9_20be);
    let mut probes: Vec<String> = Vec::new();
    let mut known: std::collections::HashSet<String> = std::collections::HashSet::new();
    let mut pool: Vec<String> = seed_inputs.clone();
    let mut attempts = 0;
    while probes.len() < count && attempts < count * 32 {
        attempts += 1;
        let base = pool[rng.gen_range(0..pool.len())].clone();
        let kind = MutationKind::ALL[rng.gen_range(0..MutationKind::ALL.len())];
        let (candidate, changed) = mutate_input(&base, kind, &mut rng);
        if !changed || !known.insert(candidate.clone()) {
            continue;
        }
        pool.push(candidate.clone());
        probes.push(candidate);
    }
    // Pad with the original inputs if mutation could not produce enough.
    for input in seed_inputs {
        if probes.len() >= count {
            break;
        }
        if known.insert(input.clone()) {
            probes.push(input);
        }
    }
    probes
}
