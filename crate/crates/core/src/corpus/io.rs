//! Line-delimited record files: one JSON object per line.
//!
//! Every file written by the toolkit starts with a header record carrying
//! the seed and config hash that produced it; readers skip header lines
//! transparently.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Dataset, Problem, Solution, SplitKind};

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("solutions reference unknown problem id {0:?}")]
    UnknownProblemId(String),
}

/// Provenance header written as the first line of every output artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordHeader {
    pub record: String,
    pub tool: String,
    pub seed: u64,
    pub config_hash: String,
}

impl RecordHeader {
    pub fn new(seed: u64, config_hash: impl Into<String>) -> Self {
        Self {
            record: "header".into(),
            tool: "cpeval".into(),
            seed,
            config_hash: config_hash.into(),
        }
    }
}

fn is_header_line(line: &str) -> bool {
    serde_json::from_str::<serde_json::Value>(line)
        .ok()
        .and_then(|v| v.get("record").and_then(|r| r.as_str()).map(|r| r == "header"))
        .unwrap_or(false)
}

/// Read all data records from a line-delimited file, skipping header lines.
/// Malformed lines are reported with their 1-based line number.
pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, RecordError> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| RecordError::Io {
        path: display.clone(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| RecordError::Io {
            path: display.clone(),
            source,
        })?;
        if line.trim().is_empty() || is_header_line(&line) {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| RecordError::Malformed {
            path: display.clone(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

/// Write records as one JSON object per line, preceded by an optional header.
pub fn write_records<T: Serialize>(
    path: &Path,
    header: Option<&RecordHeader>,
    items: impl IntoIterator<Item = T>,
) -> Result<(), RecordError> {
    let display = path.display().to_string();
    let io_err = |source| RecordError::Io {
        path: display.clone(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    let io_err = |source| RecordError::Io {
        path: display.clone(),
        source,
    };
    if let Some(h) = header {
        serde_json::to_writer(&mut w, h).map_err(|e| RecordError::Malformed {
            path: display.clone(),
            line: 1,
            message: e.to_string(),
        })?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    for item in items {
        let line = serde_json::to_string(&item).map_err(|e| RecordError::Malformed {
            path: display.clone(),
            line: 0,
            message: e.to_string(),
        })?;
        w.write_all(line.as_bytes()).map_err(io_err)?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// On-disk form of one solution line: the problem it belongs to plus the
/// solution fields inline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub problem_id: String,
    #[serde(flatten)]
    pub solution: Solution,
}

pub const PROBLEMS_FILE: &str = "problems.jsonl";
pub const SOLUTIONS_FILE: &str = "solutions.jsonl";

/// Read a dataset split from a directory holding `problems.jsonl` and
/// (optionally) `solutions.jsonl`.
pub fn read_dataset(dir: &Path, split: SplitKind) -> Result<Dataset, RecordError> {
    let problems: Vec<Problem> = read_records(&dir.join(PROBLEMS_FILE))?;
    let mut solutions: BTreeMap<String, Vec<Solution>> = BTreeMap::new();
    let sol_path = dir.join(SOLUTIONS_FILE);
    if sol_path.exists() {
        let records: Vec<SolutionRecord> = read_records(&sol_path)?;
        let known: std::collections::HashSet<&str> =
            problems.iter().map(|p| p.id.as_str()).collect();
        for r in records {
            if !known.contains(r.problem_id.as_str()) {
                return Err(RecordError::UnknownProblemId(r.problem_id));
            }
            solutions.entry(r.problem_id).or_default().push(r.solution);
        }
    }
    Ok(Dataset {
        problems,
        solutions,
        split,
    })
}

/// Write a dataset split into a directory as record files.
pub fn write_dataset(
    dir: &Path,
    dataset: &Dataset,
    header: Option<&RecordHeader>,
) -> Result<(), RecordError> {
    std::fs::create_dir_all(dir).map_err(|source| RecordError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    write_records(&dir.join(PROBLEMS_FILE), header, dataset.problems.iter())?;
    let mut sol_records = Vec::new();
    for (pid, sols) in &dataset.solutions {
        for s in sols {
            sol_records.push(SolutionRecord {
                problem_id: pid.clone(),
                solution: s.clone(),
            });
        }
    }
    write_records(&dir.join(SOLUTIONS_FILE), header, sol_records.iter())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TestCase;

    #[test]
    fn dataset_round_trips_and_skips_headers() {
        let dir = tempfile::tempdir().unwrap();
        let mut d = Dataset::new(SplitKind::Valid);
        d.problems.push(Problem {
            id: "p1".into(),
            statement: "do the thing".into(),
            example_tests: vec![TestCase::new("1\n", "2\n")],
            hidden_tests: vec![],
            generated_tests: vec![],
            time_limit_s: 2.0,
            memory_limit_bytes: 256 << 20,
            rating: Some(1500),
            tags: vec!["math".into()],
            multi_output: false,
            release_date: Some("2021-07-15".parse().unwrap()),
        });
        d.solutions.insert(
            "p1".into(),
            vec![Solution {
                language: "python".into(),
                source: "print(2)".into(),
                labeled_correct: true,
            }],
        );

        let header = RecordHeader::new(7, "deadbeef");
        write_dataset(dir.path(), &d, Some(&header)).unwrap();
        let back = read_dataset(dir.path(), SplitKind::Valid).unwrap();
        assert_eq!(back.problems.len(), 1);
        assert_eq!(back.problems[0].rating, Some(1500));
        assert_eq!(back.solutions_for("p1").len(), 1);

        let first_line = std::io::BufRead::lines(std::io::BufReader::new(
            File::open(dir.path().join(PROBLEMS_FILE)).unwrap(),
        ))
        .next()
        .unwrap()
        .unwrap();
        assert!(first_line.contains("\"record\":\"header\""));
        assert!(first_line.contains("\"seed\":7"));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"input\":\"a\",\"output\":\"b\"}\nnot json\n").unwrap();
        let err = read_records::<TestCase>(&path).unwrap_err();
        match err {
            RecordError::Malformed { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn unknown_problem_id_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(PROBLEMS_FILE), "").unwrap();
        std::fs::write(
            dir.path().join(SOLUTIONS_FILE),
            "{\"problem_id\":\"ghost\",\"language\":\"python\",\"source\":\"x\",\"labeled_correct\":false}\n",
        )
        .unwrap();
        assert!(matches!(
            read_dataset(dir.path(), SplitKind::Train),
            Err(RecordError::UnknownProblemId(_))
        ));
    }
}
