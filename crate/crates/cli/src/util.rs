//! Shared CLI plumbing: error-to-exit-code mapping, provenance headers, and
//! table rendering.

use std::fmt;
use std::path::PathBuf;

use cpeval_core::corpus::io::RecordHeader;
use cpeval_core::corpus::{io::RecordError, CorpusError};
use cpeval_core::contest::ContestError;
use cpeval_core::judge::JudgeError;
use cpeval_core::metrics::MetricsError;
use cpeval_core::runner::{RunnerError, ToolchainRegistry};
use cpeval_core::selector::SelectorError;
use cpeval_core::testgen::TestgenError;
use sha2::{Digest, Sha256};

/// Exit codes: 0 success, 1 usage, 2 data error, 3 sandbox/environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Sandbox,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Usage => 1,
            ErrorClass::Data => 2,
            ErrorClass::Sandbox => 3,
        }
    }
}

#[derive(Debug)]
pub struct CmdError {
    pub class: ErrorClass,
    pub message: String,
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CmdError {}

impl CmdError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self {
            class: ErrorClass::Usage,
            message: msg.into(),
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Self {
            class: ErrorClass::Data,
            message: msg.into(),
        }
    }

    pub fn sandbox(msg: impl Into<String>) -> Self {
        Self {
            class: ErrorClass::Sandbox,
            message: msg.into(),
        }
    }
}

impl From<RecordError> for CmdError {
    fn from(e: RecordError) -> Self {
        CmdError::data(e.to_string())
    }
}

impl From<CorpusError> for CmdError {
    fn from(e: CorpusError) -> Self {
        CmdError::data(e.to_string())
    }
}

impl From<MetricsError> for CmdError {
    fn from(e: MetricsError) -> Self {
        CmdError::data(e.to_string())
    }
}

impl From<ContestError> for CmdError {
    fn from(e: ContestError) -> Self {
        CmdError::data(e.to_string())
    }
}

impl From<RunnerError> for CmdError {
    fn from(e: RunnerError) -> Self {
        CmdError::sandbox(e.to_string())
    }
}

impl From<JudgeError> for CmdError {
    fn from(e: JudgeError) -> Self {
        match e {
            JudgeError::Runner(r) => r.into(),
            other => CmdError::data(other.to_string()),
        }
    }
}

impl From<SelectorError> for CmdError {
    fn from(e: SelectorError) -> Self {
        match e {
            SelectorError::Runner(r) => r.into(),
            SelectorError::Judge(j) => j.into(),
            other => CmdError::data(other.to_string()),
        }
    }
}

impl From<TestgenError> for CmdError {
    fn from(e: TestgenError) -> Self {
        match e {
            TestgenError::Runner(r) => r.into(),
            other => CmdError::data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::data(e.to_string())
    }
}

/// Hash of the semantic run configuration. Worker count is deliberately
/// excluded: it must never change outputs.
pub fn config_hash(seed: u64, subcommand: &str, args_json: &serde_json::Value) -> String {
    let canonical = serde_json::json!({
        "seed": seed,
        "subcommand": subcommand,
        "args": args_json,
    });
    let mut hasher = Sha256::new();
    hasher.update(canonical.to_string().as_bytes());
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub fn header(seed: u64, subcommand: &str, args_json: &serde_json::Value) -> RecordHeader {
    RecordHeader::new(seed, config_hash(seed, subcommand, args_json))
}

/// Independent seed per problem, stable under problem reordering.
pub fn problem_seed(master: u64, problem_id: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(problem_id.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    master ^ u64::from_le_bytes(bytes)
}

/// Load the toolchain registry from --config, or the built-in defaults.
pub fn load_registry(config: &Option<PathBuf>) -> Result<ToolchainRegistry, CmdError> {
    match config {
        Some(path) => Ok(ToolchainRegistry::from_toml_path(path)?),
        None => Ok(ToolchainRegistry::default()),
    }
}

/// Render a fixed-width table: header row plus data rows.
pub fn print_table(headers: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            if i < widths.len() {
                widths[i] = widths[i].max(cell.len());
            }
        }
    }
    let line = |cells: Vec<String>| {
        let joined: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        println!("  {}", joined.join("  "));
    };
    line(headers.iter().map(|s| s.to_string()).collect());
    line(widths.iter().map(|w| "-".repeat(*w)).collect());
    for row in rows {
        line(row.clone());
    }
}

/// Parse a comma-separated list of integers.
pub fn parse_u64_list(text: &str) -> Result<Vec<u64>, CmdError> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<u64>()
                .map_err(|_| CmdError::usage(format!("invalid integer {part:?} in list")))
        })
        .collect()
}
