//! Compile and execute candidate programs in isolated OS processes under
//! time and memory limits.
//!
//! Every execution gets its own scratch directory and process group.
//! Enforcement is layered: a polling monitor applies the precise CPU, wall,
//! memory, and output-cap limits, with kernel rlimits as hard backstops.

mod sandbox;
mod toolchain;

pub use toolchain::{Toolchain, ToolchainRegistry};

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tempfile::TempDir;
use thiserror::Error;

use crate::corpus::{Problem, Solution};

/// Environment variable overriding the worker pool size.
pub const WORKERS_ENV: &str = "CPEVAL_WORKERS";

pub const DEFAULT_OUTPUT_CAP: u64 = 16 << 20;
/// Wall-clock backstop multiplier over the CPU limit, to catch sleep-based
/// stalls.
pub const WALL_TIME_FACTOR: f64 = 3.0;
/// Allowed scheduler slack beyond the CPU limit in measured usage.
pub const DEFAULT_CPU_SLACK: f64 = 0.25;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("unknown language {0:?}: no toolchain registered")]
    UnknownLanguage(String),
    #[error("sandbox setup failed: {0}")]
    Sandbox(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceLimits {
    /// CPU seconds the program may consume.
    pub cpu_time: f64,
    /// Wall-clock backstop in seconds; must be >= cpu_time.
    pub wall_time: f64,
    /// Memory ceiling in bytes.
    pub memory: u64,
    /// Maximum bytes of stdout captured before the run is cut off.
    pub output_cap: u64,
}

impl ResourceLimits {
    pub fn new(cpu_time: f64, memory: u64) -> Self {
        Self {
            cpu_time,
            wall_time: cpu_time * WALL_TIME_FACTOR,
            memory,
            output_cap: DEFAULT_OUTPUT_CAP,
        }
    }

    pub fn for_problem(p: &Problem) -> Self {
        Self::new(p.time_limit_s, p.memory_limit_bytes)
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.cpu_time) || !positive(self.wall_time) {
            return Err("cpu_time and wall_time must be positive".into());
        }
        if self.wall_time < self.cpu_time {
            return Err("wall_time must be >= cpu_time".into());
        }
        if self.memory == 0 || self.output_cap == 0 {
            return Err("memory and output_cap must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecStatus {
    Ok,
    Timeout,
    MemoryExceeded,
    NonzeroExit,
    Signal,
    OutputTruncated,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub status: ExecStatus,
    pub stdout: String,
    pub stderr: String,
    pub cpu_time_used: f64,
    pub memory_used: u64,
    pub wall_time_used: f64,
    pub exit_code: Option<i32>,
    pub signal: Option<i32>,
}

impl ExecutionResult {
    /// A successful result with the given stdout; handy in tests.
    pub fn ok_with_stdout(stdout: impl Into<String>) -> Self {
        Self {
            status: ExecStatus::Ok,
            stdout: stdout.into(),
            stderr: String::new(),
            cpu_time_used: 0.0,
            memory_used: 0,
            wall_time_used: 0.0,
            exit_code: Some(0),
            signal: None,
        }
    }
}

/// Sandbox behavior knobs shared by all executions of a [`Runner`].
#[derive(Debug, Clone)]
pub struct SandboxConfig {
    /// Give each execution an empty network namespace (best effort).
    pub isolate_network: bool,
    /// RLIMIT_NPROC applied to executed programs, bounding fork bombs.
    pub nproc_limit: Option<u64>,
    /// Steady-state monitor poll interval.
    pub poll_interval: Duration,
    /// Wall-clock limit for compile steps, seconds.
    pub compile_wall_time: f64,
}

impl Default for SandboxConfig {
    fn default() -> Self {
        Self {
            isolate_network: true,
            nproc_limit: Some(64),
            poll_interval: Duration::from_millis(10),
            compile_wall_time: 60.0,
        }
    }
}

/// A compiled (or syntax-checked) program, runnable until dropped.
///
/// The scratch directory holding the artifact lives as long as any clone of
/// the handle.
#[derive(Debug, Clone)]
pub struct CompiledProgram {
    pub language: String,
    pub compile_log: String,
    run_argv: Vec<String>,
    workdir: Arc<TempDir>,
}

impl CompiledProgram {
    pub fn artifact_dir(&self) -> &std::path::Path {
        self.workdir.path()
    }
}

#[derive(Debug, Error)]
pub enum CompileFailure {
    #[error("compilation rejected:\n{log}")]
    Rejected { log: String },
    #[error("compilation timed out")]
    Timeout,
    #[error(transparent)]
    Setup(#[from] RunnerError),
}

/// Compiles programs against a toolchain registry.
#[derive(Debug, Clone, Default)]
pub struct Runner {
    pub registry: ToolchainRegistry,
    pub sandbox: SandboxConfig,
}

impl Runner {
    pub fn new(registry: ToolchainRegistry, sandbox: SandboxConfig) -> Self {
        Self { registry, sandbox }
    }

    /// Compile a solution into a runnable handle. For interpreted languages
    /// this performs the configured syntax check only.
    ///
    /// Compilation runs under the sandbox's compile wall time with generous
    /// memory: the run limits constrain the judged program, not the
    /// compiler. `limits` is validated here so misconfiguration surfaces
    /// before any execution.
    pub fn compile(
        &self,
        solution: &Solution,
        limits: &ResourceLimits,
    ) -> Result<CompiledProgram, CompileFailure> {
        limits
            .validate()
            .map_err(|e| CompileFailure::Setup(RunnerError::Config(e)))?;
        let toolchain = self.registry.get(&solution.language)?;
        let workdir = TempDir::new()
            .map_err(|e| RunnerError::Sandbox(format!("cannot create scratch dir: {e}")))?;
        let src = workdir.path().join(format!("main.{}", toolchain.source_ext));
        let bin = workdir.path().join("prog");
        std::fs::write(&src, &solution.source)
            .map_err(|e| RunnerError::Sandbox(format!("cannot write source: {e}")))?;

        let compile_limits = ResourceLimits {
            cpu_time: self.sandbox.compile_wall_time,
            wall_time: self.sandbox.compile_wall_time,
            memory: 4 << 30,
            output_cap: DEFAULT_OUTPUT_CAP,
        };

        let check_cmd = toolchain
            .compile_cmd
            .as_ref()
            .or(toolchain.syntax_check_cmd.as_ref());
        let mut log = String::new();
        if let Some(template) = check_cmd {
            let argv = Toolchain::substitute(template, &src, &bin, workdir.path());
            let result =
                sandbox::run_sandboxed(&argv, workdir.path(), b"", &compile_limits, &self.sandbox)?;
            // Diagnostics embed the scratch path; scrub it so logs are
            // reproducible across runs.
            log = format!("{}{}", result.stdout, result.stderr)
                .replace(&workdir.path().display().to_string(), "<scratch>");
            match result.status {
                ExecStatus::Ok => {}
                ExecStatus::Timeout => return Err(CompileFailure::Timeout),
                _ => return Err(CompileFailure::Rejected { log }),
            }
        }

        let run_argv = Toolchain::substitute(&toolchain.run_cmd, &src, &bin, workdir.path());
        Ok(CompiledProgram {
            language: solution.language.clone(),
            compile_log: log,
            run_argv,
            workdir: Arc::new(workdir),
        })
    }

    /// Build an execution pool over this runner's sandbox configuration.
    /// `workers = 0` selects the number of logical CPUs; the `CPEVAL_WORKERS`
    /// environment variable overrides either.
    pub fn pool(&self, workers: usize) -> ExecPool {
        ExecPool::new(workers, self.sandbox.clone())
    }
}

/// A bounded worker pool executing programs; results are always ordered by
/// input index regardless of completion order.
#[derive(Debug, Clone)]
pub struct ExecPool {
    workers: usize,
    sandbox: SandboxConfig,
}

impl ExecPool {
    pub fn new(workers: usize, sandbox: SandboxConfig) -> Self {
        let env_override = std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&w| w > 0);
        let configured = env_override.unwrap_or(workers);
        let workers = if configured == 0 {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        } else {
            configured
        };
        Self { workers, sandbox }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Execute one program on one input under limits.
    pub fn execute(
        &self,
        program: &CompiledProgram,
        input: &str,
        limits: &ResourceLimits,
    ) -> Result<ExecutionResult, RunnerError> {
        // Each execution gets its own scratch cwd so concurrent runs of the
        // same program never share files.
        let scratch = TempDir::new()
            .map_err(|e| RunnerError::Sandbox(format!("cannot create scratch dir: {e}")))?;
        sandbox::run_sandboxed(
            &program.run_argv,
            scratch.path(),
            input.as_bytes(),
            limits,
            &self.sandbox,
        )
    }

    /// Run a program over a test suite; results are positionally aligned
    /// with the inputs and identical to sequential execution for
    /// deterministic programs.
    pub fn run_suite(
        &self,
        program: &CompiledProgram,
        inputs: &[&str],
        limits: &ResourceLimits,
    ) -> Result<Vec<ExecutionResult>, RunnerError> {
        let results = self.map(inputs, |_, input| self.execute(program, input, limits));
        results.into_iter().collect()
    }

    /// Apply `f` to every item on the worker pool; output order matches
    /// input order.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(usize, &T) -> R + Sync,
    {
        let n = items.len();
        if n == 0 {
            return Vec::new();
        }
        let slots: Vec<Mutex<Option<R>>> = (0..n).map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..self.workers.min(n) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= n {
                        break;
                    }
                    let r = f(i, &items[i]);
                    *slots[i].lock().unwrap() = Some(r);
                });
            }
        });
        slots
            .into_iter()
            .map(|slot| slot.into_inner().unwrap().expect("worker filled slot"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn python(source: &str) -> Solution {
        Solution {
            language: "python".into(),
            source: source.into(),
            labeled_correct: false,
        }
    }

    fn runner() -> Runner {
        Runner::new(ToolchainRegistry::default(), SandboxConfig::default())
    }

    fn limits() -> ResourceLimits {
        ResourceLimits::new(2.0, 256 << 20)
    }

    #[test]
    fn echo_like_program_runs_ok() {
        let r = runner();
        let program = r
            .compile(&python("import sys; sys.stdout.write(sys.stdin.read())"), &limits())
            .unwrap();
        let result = r.pool(1).execute(&program, "hi", &limits()).unwrap();
        assert_eq!(result.status, ExecStatus::Ok);
        assert_eq!(result.stdout, "hi");
    }

    #[test]
    fn syntax_error_is_a_compile_error() {
        let r = runner();
        let err = r.compile(&python("def broken(:\n  pass"), &limits());
        match err {
            Err(CompileFailure::Rejected { log }) => {
                assert!(log.to_lowercase().contains("syntax"), "log: {log}");
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn infinite_loop_times_out_near_cpu_limit() {
        let r = runner();
        let lim = ResourceLimits::new(1.0, 256 << 20);
        let program = r.compile(&python("while True: pass"), &lim).unwrap();
        let result = r.pool(1).execute(&program, "", &lim).unwrap();
        assert_eq!(result.status, ExecStatus::Timeout);
        assert!(
            result.cpu_time_used <= lim.cpu_time + DEFAULT_CPU_SLACK,
            "cpu used {} beyond slack",
            result.cpu_time_used
        );
    }

    #[test]
    fn sleeping_program_hits_wall_backstop() {
        let r = runner();
        let lim = ResourceLimits {
            cpu_time: 0.5,
            wall_time: 1.0,
            memory: 256 << 20,
            output_cap: DEFAULT_OUTPUT_CAP,
        };
        let program = r
            .compile(&python("import time; time.sleep(30)"), &lim)
            .unwrap();
        let result = r.pool(1).execute(&program, "", &lim).unwrap();
        assert_eq!(result.status, ExecStatus::Timeout);
    }

    #[test]
    fn allocating_past_the_limit_is_memory_exceeded() {
        let r = runner();
        let lim = ResourceLimits::new(2.0, 128 << 20);
        let src = r#"
import time
chunks = []
for _ in range(512):
    chunks.append(b"x" * (1 << 20))
    time.sleep(0.001)
print("survived")
"#;
        let program = r.compile(&python(src), &lim).unwrap();
        let result = r.pool(1).execute(&program, "", &lim).unwrap();
        assert_eq!(result.status, ExecStatus::MemoryExceeded);
    }

    #[test]
    fn crash_is_runtime_signal_or_nonzero() {
        let r = runner();
        let program = r
            .compile(&python("import sys; sys.exit(3)"), &limits())
            .unwrap();
        let result = r.pool(1).execute(&program, "", &limits()).unwrap();
        assert_eq!(result.status, ExecStatus::NonzeroExit);
        assert_eq!(result.exit_code, Some(3));

        let program = r
            .compile(&python("import os, signal; os.kill(os.getpid(), signal.SIGSEGV)"), &limits())
            .unwrap();
        let result = r.pool(1).execute(&program, "", &limits()).unwrap();
        assert_eq!(result.status, ExecStatus::Signal);
    }

    #[test]
    fn oversized_output_is_truncated() {
        let r = runner();
        let lim = ResourceLimits {
            cpu_time: 5.0,
            wall_time: 15.0,
            memory: 256 << 20,
            output_cap: 64 * 1024,
        };
        let program = r
            .compile(
                &python("import sys\nfor _ in range(100000): sys.stdout.write('x' * 100)"),
                &lim,
            )
            .unwrap();
        let result = r.pool(1).execute(&program, "", &lim).unwrap();
        assert_eq!(result.status, ExecStatus::OutputTruncated);
        assert!(result.stdout.len() <= 64 * 1024);
    }

    #[test]
    fn run_suite_matches_sequential_execution() {
        let r = runner();
        let program = r
            .compile(&python("print(int(input()) * 2)"), &limits())
            .unwrap();
        let inputs = ["1", "2", "3"];
        let pool = r.pool(3);
        let batch = pool.run_suite(&program, &inputs, &limits()).unwrap();
        assert_eq!(batch.len(), 3);
        for (input, result) in inputs.iter().zip(&batch) {
            let single = pool.execute(&program, input, &limits()).unwrap();
            assert_eq!(result.status, ExecStatus::Ok);
            assert_eq!(result.stdout, single.stdout);
        }
        assert!(pool
            .run_suite(&program, &[], &limits())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn determinism_of_repeated_execution() {
        let r = runner();
        let program = r
            .compile(&python("import sys; print(sum(map(int, sys.stdin.read().split())))"), &limits())
            .unwrap();
        let pool = r.pool(2);
        let a = pool.execute(&program, "1 2 3", &limits()).unwrap();
        let b = pool.execute(&program, "1 2 3", &limits()).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.stdout, b.stdout);
    }

    #[test]
    fn hostile_fork_spawner_does_not_disturb_siblings() {
        let r = runner();
        // Spawns a pile of sleeping children then spins; the group kill has
        // to reap all of them.
        let hostile = r#"
import os, time
for _ in range(20):
    if os.fork() == 0:
        time.sleep(60)
        os._exit(0)
while True:
    pass
"#;
        let lim = ResourceLimits {
            cpu_time: 0.5,
            wall_time: 1.0,
            memory: 256 << 20,
            output_cap: DEFAULT_OUTPUT_CAP,
        };
        let bomb = r.compile(&python(hostile), &lim).unwrap();
        let ok_prog = r.compile(&python("print('fine')"), &limits()).unwrap();
        let pool = r.pool(2);

        let results = pool.map(&[0, 1, 2], |i, _| {
            if i == 1 {
                pool.execute(&bomb, "", &lim).unwrap().status
            } else {
                pool.execute(&ok_prog, "", &limits()).unwrap().status
            }
        });
        assert_eq!(results[0], ExecStatus::Ok);
        assert_eq!(results[2], ExecStatus::Ok);
        assert_ne!(results[1], ExecStatus::Ok);

        // And a sibling executed afterwards still works.
        let after = pool.execute(&ok_prog, "", &limits()).unwrap();
        assert_eq!(after.status, ExecStatus::Ok);
        assert_eq!(after.stdout.trim(), "fine");
    }

    #[test]
    fn cpp_toolchain_compiles_and_runs() {
        let r = runner();
        let cpp = Solution {
            language: "cpp".into(),
            source: "#include <cstdio>\nint main(){int x; if(scanf(\"%d\",&x)==1) printf(\"%d\\n\", x+1); return 0;}".into(),
            labeled_correct: false,
        };
        let program = r.compile(&cpp, &limits()).unwrap();
        let result = r.pool(1).execute(&program, "41", &limits()).unwrap();
        assert_eq!(result.status, ExecStatus::Ok);
        assert_eq!(result.stdout.trim(), "42");

        let broken = Solution {
            language: "cpp".into(),
            source: "int main( { return 0; }".into(),
            labeled_correct: false,
        };
        assert!(matches!(
            r.compile(&broken, &limits()),
            Err(CompileFailure::Rejected { .. })
        ));
    }

    #[test]
    fn pathological_compile_times_out() {
        let mut r = runner();
        r.sandbox.compile_wall_time = 1.0;
        // Exponential constexpr evaluation grinds the compiler for several
        // seconds, far past the one-second budget.
        let blowup = Solution {
            language: "cpp".into(),
            source: r#"
constexpr long long fib(int n) { return n < 2 ? 1 : fib(n - 1) + fib(n - 2); }
static_assert(fib(36) > 0, "force evaluation");
int main() { return 0; }
"#
            .into(),
            labeled_correct: false,
        };
        match r.compile(&blowup, &limits()) {
            Err(CompileFailure::Timeout) => {}
            other => panic!("expected compile timeout, got {other:?}"),
        }
    }

    #[test]
    fn unknown_language_is_reported() {
        let r = runner();
        let sol = Solution {
            language: "brainfuck".into(),
            source: "+".into(),
            labeled_correct: false,
        };
        assert!(matches!(
            r.compile(&sol, &limits()),
            Err(CompileFailure::Setup(RunnerError::UnknownLanguage(_)))
        ));
    }
}
