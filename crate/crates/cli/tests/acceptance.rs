//! CLI acceptance: every subcommand, run with the same seed but different
//! worker counts, produces byte-identical record outputs; exit codes follow
//! the documented 0/1/2/3 scheme; artifacts carry seed and config hash.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_cpeval")
}

fn write(path: &Path, content: &str) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, content).unwrap();
}

fn fixture_root() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    let problem = serde_json::json!({
        "id": "double",
        "statement": "Read one integer, print twice its value.",
        "example_tests": [{"input": "2\n", "output": "4\n"}],
        "hidden_tests": [
            {"input": "5\n", "output": "10\n"},
            {"input": "0\n", "output": "0\n"},
            {"input": "7\n", "output": "14\n"},
            {"input": "100\n", "output": "200\n"},
            {"input": "-3\n", "output": "-6\n"}
        ],
        "generated_tests": [],
        "time_limit_s": 0.5,
        "memory_limit_bytes": 268435456u64,
        "rating": 800,
        "tags": ["math"],
        "multi_output": false,
        "release_date": "2021-06-01"
    });
    write(
        &root.join("data/problems.jsonl"),
        &format!("{problem}\n"),
    );

    let solutions = [
        ("print(int(input())*2)", true),
        ("print(int(input()) * 2)", true),
        ("n=int(input())\nprint(n+n)", true),
        ("print(3)", false),
    ];
    let sol_lines: String = solutions
        .iter()
        .map(|(src, ok)| {
            serde_json::json!({
                "problem_id": "double",
                "language": "python",
                "source": src,
                "labeled_correct": ok
            })
            .to_string()
                + "\n"
        })
        .collect();
    write(&root.join("data/solutions.jsonl"), &sol_lines);

    let samples = [
        ("s1", "print(int(input())*2)"),
        ("s2", "x=int(input());print(2*x)"),
        ("s3", "print(4)"),
        ("s4", "print(int(input())*3)"),
        ("s5", "while True:\n    pass"),
        ("s6", "def broken(:\n    pass"),
    ];
    let sample_lines: String = samples
        .iter()
        .map(|(id, src)| {
            serde_json::json!({
                "id": id,
                "problem_id": "double",
                "language": "python",
                "source": src,
                "metadata": {}
            })
            .to_string()
                + "\n"
        })
        .collect();
    write(&root.join("samples.jsonl"), &sample_lines);

    let board_lines: String = (0..20)
        .map(|i| {
            serde_json::json!({
                "participant_id": format!("u{i}"),
                "score": 1000.0 - i as f64,
                "rank": i + 1,
                "rating_before": 1600 - i * 10
            })
            .to_string()
                + "\n"
        })
        .collect();
    write(&root.join("scoreboard.jsonl"), &board_lines);
    write(
        &root.join("contests.jsonl"),
        "{\"contest_id\":\"c1\",\"scoreboard\":\"scoreboard.jsonl\",\"achieved_rank\":3}\n{\"contest_id\":\"c2\",\"scoreboard\":\"scoreboard.jsonl\",\"achieved_rank\":11}\n",
    );
    write(&root.join("cand.py"), "print(int(input())*2)\n");

    dir
}

fn run_in(root: &Path, workers: usize, args: &[&str]) -> Output {
    let w = workers.to_string();
    let full: Vec<&str> = [&["--seed", "42", "--workers", &w], args].concat();
    let out = Command::new(bin())
        .args(&full)
        .current_dir(root)
        .env_remove("CPEVAL_WORKERS")
        .output()
        .expect("spawn cpeval");
    assert!(
        out.status.success(),
        "cpeval {:?} failed: {}\n{}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Run the full workflow with the given worker count; outputs land in
/// out/ under the fixture root, which the caller then renames.
fn run_workflow(root: &Path, workers: usize) {
    fs::create_dir_all(root.join("out")).unwrap();
    run_in(root, workers, &[
        "clean", "--input", "data", "--output", "out/cleaned",
        "--report", "out/clean-report.jsonl",
    ]);
    run_in(root, workers, &[
        "gen-tests", "--input", "out/cleaned", "--output", "out/gen",
        "--max-tests", "3", "--max-cpu-seconds", "30",
        "--report", "out/gen-report.jsonl",
    ]);
    run_in(root, workers, &[
        "judge", "--problems", "out/gen/problems.jsonl", "--samples", "samples.jsonl",
        "--out", "out/verdicts.jsonl", "--outcomes", "out/outcomes.jsonl",
    ]);
    run_in(root, workers, &[
        "evaluate", "--outcomes", "out/outcomes.jsonl",
        "--n-list", "1,2", "--k-list", "2,4", "--resamples", "300",
        "--out", "out/estimates.jsonl",
    ]);
    run_in(root, workers, &[
        "select", "--problems", "out/gen/problems.jsonl", "--samples", "samples.jsonl",
        "--budget", "3", "--out", "out/selection.jsonl",
    ]);
    run_in(root, workers, &[
        "simulate", "--problems", "out/gen/problems.jsonl", "--samples", "samples.jsonl",
        "--scoreboard", "scoreboard.jsonl", "--out", "out/outcome.jsonl",
    ]);
    run_in(root, workers, &[
        "rating", "--contests", "contests.jsonl", "--out", "out/rating.jsonl",
    ]);
    run_in(root, workers, &[
        "lcs", "--candidate", "cand.py", "--corpus", "samples.jsonl",
        "--corpus", "data/solutions.jsonl", "--out", "out/lcs.jsonl",
    ]);
}

fn collect_files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(cur) = stack.pop() {
        for entry in fs::read_dir(&cur).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_path_buf();
                files.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

/// Criterion 12: byte-identical record outputs across worker counts and
/// across repeated runs with the same seed.
#[test]
fn criterion_12_cli_determinism_across_workers() {
    let fixture = fixture_root();
    let root = fixture.path();

    run_workflow(root, 1);
    fs::rename(root.join("out"), root.join("run-w1")).unwrap();
    run_workflow(root, 3);
    fs::rename(root.join("out"), root.join("run-w3")).unwrap();
    run_workflow(root, 1);
    fs::rename(root.join("out"), root.join("run-w1-again")).unwrap();

    let w1 = collect_files(&root.join("run-w1"));
    let w3 = collect_files(&root.join("run-w3"));
    let w1_again = collect_files(&root.join("run-w1-again"));

    assert_eq!(w1.len(), w3.len());
    for ((path_a, bytes_a), (path_b, bytes_b)) in w1.iter().zip(&w3) {
        assert_eq!(path_a, path_b);
        assert_eq!(
            bytes_a, bytes_b,
            "{} differs between --workers 1 and --workers 3",
            path_a.display()
        );
    }
    for ((path_a, bytes_a), (path_b, bytes_b)) in w1.iter().zip(&w1_again) {
        assert_eq!(path_a, path_b);
        assert_eq!(
            bytes_a, bytes_b,
            "{} differs between repeated identical runs",
            path_a.display()
        );
    }

    // Every artifact embeds the seed and a config hash in its header line.
    for (path, bytes) in &w1 {
        let text = String::from_utf8_lossy(bytes);
        let first = text.lines().next().unwrap_or_default();
        assert!(
            first.contains("\"record\":\"header\"")
                && first.contains("\"seed\":42")
                && first.contains("\"config_hash\":"),
            "{} lacks a provenance header: {first}",
            path.display()
        );
    }
    println!(
        "ACCEPTANCE criterion 12: PASS ({} artifacts byte-identical across workers)",
        w1.len()
    );
}

/// A toolchain config file registers new language tags without code
/// changes.
#[test]
fn custom_toolchain_config_is_honored() {
    let fixture = fixture_root();
    let root = fixture.path();
    write(
        &root.join("toolchains.toml"),
        r#"
[languages.snake]
source_ext = "py"
run_cmd = ["python3", "{src}"]
syntax_check_cmd = ["python3", "-m", "py_compile", "{src}"]
"#,
    );
    write(
        &root.join("snake.jsonl"),
        "{\"id\":\"n1\",\"problem_id\":\"double\",\"language\":\"snake\",\"source\":\"print(int(input())*2)\",\"metadata\":{}}\n",
    );
    let out = Command::new(bin())
        .args([
            "--config", "toolchains.toml",
            "judge", "--problems", "data/problems.jsonl", "--samples", "snake.jsonl",
            "--out", "snake-verdicts.jsonl",
        ])
        .current_dir(root)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let verdicts = fs::read_to_string(root.join("snake-verdicts.jsonl")).unwrap();
    assert!(verdicts.contains("\"kind\":\"accepted\""), "{verdicts}");
}

/// Exit codes: 1 for usage errors, 2 for data errors (naming the bad line),
/// 3 for sandbox/environment errors.
#[test]
fn exit_codes_follow_the_scheme() {
    let fixture = fixture_root();
    let root = fixture.path();

    // Usage: n > k.
    let out = Command::new(bin())
        .args([
            "evaluate", "--counts", "missing.jsonl", "--n-list", "5", "--k-list", "2",
            "--out", "x.jsonl",
        ])
        .current_dir(root)
        .output()
        .unwrap();
    // Reading the counts file fails first unless it exists; create it.
    write(&root.join("counts.jsonl"), "{\"problem_id\":\"p\",\"K\":4,\"e\":2,\"s\":1}\n");
    let out_usage = Command::new(bin())
        .args([
            "evaluate", "--counts", "counts.jsonl", "--n-list", "5", "--k-list", "2",
            "--out", "x.jsonl",
        ])
        .current_dir(root)
        .output()
        .unwrap();
    assert_eq!(out_usage.status.code(), Some(1), "usage error exit code");
    assert_eq!(out.status.code(), Some(1), "n>k rejected before I/O");

    // Usage: unknown flag via clap.
    let out = Command::new(bin()).args(["clean", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Data: malformed record names its line.
    write(
        &root.join("bad/problems.jsonl"),
        "{\"id\":\"ok\",\"statement\":\"s\",\"example_tests\":[],\"hidden_tests\":[],\"generated_tests\":[],\"time_limit_s\":1.0,\"memory_limit_bytes\":1048576,\"tags\":[],\"multi_output\":false}\nnot json at all\n",
    );
    let out = Command::new(bin())
        .args(["clean", "--input", "bad", "--output", "bad-out", "--skip-execution"])
        .current_dir(root)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "data error exit code");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(":2:"), "error names line 2: {stderr}");

    // Sandbox/environment: judging a sample in a language with no toolchain.
    write(
        &root.join("alien.jsonl"),
        "{\"id\":\"a1\",\"problem_id\":\"double\",\"language\":\"cobol\",\"source\":\"x\",\"metadata\":{}}\n",
    );
    let out = Command::new(bin())
        .args([
            "judge", "--problems", "data/problems.jsonl", "--samples", "alien.jsonl",
            "--out", "alien-verdicts.jsonl",
        ])
        .current_dir(root)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "sandbox error exit code");
}
