//! Low-level sandboxed process execution.
//!
//! Each execution runs in its own session (process group) inside a scratch
//! directory with OS resource limits applied, and is watched by a polling
//! monitor that enforces sub-second CPU limits, a wall-clock backstop,
//! memory ceilings, and the output capture cap. The whole process group is
//! killed on any violation so runaway children cannot outlive the run.

use std::io::{Read, Write};
use std::os::unix::process::CommandExt;
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use super::{ExecStatus, ExecutionResult, ResourceLimits, RunnerError, SandboxConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum KillReason {
    Wall,
    Cpu,
    Memory,
    Output,
}

pub(crate) fn run_sandboxed(
    argv: &[String],
    workdir: &Path,
    input: &[u8],
    limits: &ResourceLimits,
    cfg: &SandboxConfig,
) -> Result<ExecutionResult, RunnerError> {
    limits.validate().map_err(RunnerError::Config)?;
    let mut cmd = Command::new(&argv[0]);
    cmd.args(&argv[1..])
        .current_dir(workdir)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .env_clear()
        .env("PATH", std::env::var("PATH").unwrap_or_default())
        .env("HOME", workdir)
        .env("TMPDIR", workdir);

    let rlim_cpu = limits.cpu_time.ceil() as u64 + 1;
    // Virtual address-space cap well above the memory limit: the monitor
    // kills at the limit itself, the rlimit is the hard backstop.
    let rlim_as = limits.memory.saturating_mul(2).saturating_add(64 << 20);
    let rlim_fsize = limits.output_cap;
    let nproc = cfg.nproc_limit;
    let isolate_net = cfg.isolate_network;
    unsafe {
        cmd.pre_exec(move || {
            if libc::setsid() == -1 {
                return Err(std::io::Error::last_os_error());
            }
            if isolate_net {
                // Best effort; requires privileges we may not have.
                libc::unshare(libc::CLONE_NEWNET);
            }
            set_rlimit(libc::RLIMIT_CPU, rlim_cpu, rlim_cpu + 1)?;
            set_rlimit(libc::RLIMIT_AS, rlim_as, rlim_as)?;
            set_rlimit(libc::RLIMIT_CORE, 0, 0)?;
            set_rlimit(libc::RLIMIT_FSIZE, rlim_fsize, rlim_fsize)?;
            if let Some(n) = nproc {
                // Ignore failure: not meaningful on all platforms.
                let lim = libc::rlimit {
                    rlim_cur: n,
                    rlim_max: n,
                };
                libc::setrlimit(libc::RLIMIT_NPROC, &lim);
            }
            Ok(())
        });
    }

    let mut child = cmd.spawn().map_err(|e| {
        RunnerError::Sandbox(format!("failed to spawn {:?}: {e}", argv[0]))
    })?;
    let pid = child.id() as libc::pid_t;

    let mut stdin = child.stdin.take().expect("stdin piped");
    let stdout = child.stdout.take().expect("stdout piped");
    let stderr = child.stderr.take().expect("stderr piped");

    let cap = limits.output_cap as usize;
    let truncated = AtomicBool::new(false);
    let start = Instant::now();

    let (result_status, stdout_buf, stderr_buf, rusage, kill_reason, peak_rss, peak_vsize) =
        std::thread::scope(|scope| {
            let input_owned = input.to_vec();
            scope.spawn(move || {
                // Ignore broken pipes: the program may exit without reading.
                let _ = stdin.write_all(&input_owned);
                let _ = stdin.flush();
                drop(stdin);
            });
            let out_handle = scope.spawn(|| read_capped(stdout, cap, &truncated));
            let err_handle = scope.spawn(|| read_capped(stderr, cap, &AtomicBool::new(false)));

            let mut kill_reason: Option<KillReason> = None;
            let mut peak_rss: u64 = 0;
            let mut peak_vsize: u64 = 0;
            let mut status: libc::c_int = 0;
            let mut rusage: libc::rusage = unsafe { std::mem::zeroed() };
            // Start with a short poll for snappy small runs, back off to the
            // configured interval.
            let mut poll = Duration::from_millis(1);

            loop {
                let reaped = unsafe {
                    libc::wait4(pid, &mut status, libc::WNOHANG, &mut rusage)
                };
                if reaped == pid {
                    break;
                }
                if reaped == -1 {
                    // Interrupted or lost; treat as setup failure.
                    let e = std::io::Error::last_os_error();
                    return (
                        Err(RunnerError::Sandbox(format!("wait4 failed: {e}"))),
                        Vec::new(),
                        Vec::new(),
                        rusage,
                        kill_reason,
                        peak_rss,
                        peak_vsize,
                    );
                }

                if kill_reason.is_none() {
                    let elapsed = start.elapsed().as_secs_f64();
                    if elapsed > limits.wall_time {
                        kill_reason = Some(KillReason::Wall);
                    } else if truncated.load(Ordering::Relaxed) {
                        kill_reason = Some(KillReason::Output);
                    } else {
                        if let Some(cpu) = read_proc_cpu_seconds(pid) {
                            if cpu > limits.cpu_time {
                                kill_reason = Some(KillReason::Cpu);
                            }
                        }
                        if let Some((vsize, rss)) = read_proc_memory(pid) {
                            peak_vsize = peak_vsize.max(vsize);
                            peak_rss = peak_rss.max(rss);
                            if peak_vsize > limits.memory || peak_rss > limits.memory {
                                kill_reason = Some(KillReason::Memory);
                            }
                        }
                    }
                }
                if kill_reason.is_some() {
                    kill_group(pid);
                }
                std::thread::sleep(poll);
                poll = (poll * 2).min(cfg.poll_interval);
            }

            // The leader is reaped; sweep any group stragglers.
            for _ in 0..100 {
                if unsafe { libc::kill(-pid, libc::SIGKILL) } != 0 {
                    break;
                }
                std::thread::sleep(Duration::from_millis(1));
            }

            let stdout_buf = out_handle.join().unwrap_or_default();
            let stderr_buf = err_handle.join().unwrap_or_default();
            (
                Ok(status),
                stdout_buf,
                stderr_buf,
                rusage,
                kill_reason,
                peak_rss,
                peak_vsize,
            )
        });

    let status = result_status?;
    let was_truncated = truncated.load(Ordering::Relaxed);
    let cpu_used = rusage_cpu_seconds(&rusage);
    let mem_used = (rusage.ru_maxrss as u64).saturating_mul(1024).max(peak_rss);

    let exec_status = classify(
        status,
        kill_reason,
        was_truncated,
        cpu_used,
        mem_used,
        peak_vsize,
        limits,
    );

    let (exit_code, signal) = decode_status(status);
    Ok(ExecutionResult {
        status: exec_status,
        stdout: String::from_utf8_lossy(&stdout_buf).into_owned(),
        stderr: String::from_utf8_lossy(&stderr_buf).into_owned(),
        cpu_time_used: cpu_used,
        memory_used: mem_used,
        wall_time_used: start.elapsed().as_secs_f64(),
        exit_code,
        signal,
    })
}

fn classify(
    status: libc::c_int,
    kill_reason: Option<KillReason>,
    truncated: bool,
    cpu_used: f64,
    mem_used: u64,
    peak_vsize: u64,
    limits: &ResourceLimits,
) -> ExecStatus {
    match kill_reason {
        Some(KillReason::Wall) | Some(KillReason::Cpu) => return ExecStatus::Timeout,
        Some(KillReason::Memory) => return ExecStatus::MemoryExceeded,
        Some(KillReason::Output) => return ExecStatus::OutputTruncated,
        None => {}
    }
    if truncated {
        return ExecStatus::OutputTruncated;
    }
    let over_memory = mem_used >= limits.memory || peak_vsize >= limits.memory;
    if libc::WIFSIGNALED(status) {
        let sig = libc::WTERMSIG(status);
        if sig == libc::SIGXCPU || cpu_used >= limits.cpu_time {
            return ExecStatus::Timeout;
        }
        if over_memory {
            return ExecStatus::MemoryExceeded;
        }
        return ExecStatus::Signal;
    }
    let code = libc::WEXITSTATUS(status);
    if code == 0 {
        ExecStatus::Ok
    } else if over_memory {
        // Allocation failed against the address-space backstop.
        ExecStatus::MemoryExceeded
    } else {
        ExecStatus::NonzeroExit
    }
}

fn decode_status(status: libc::c_int) -> (Option<i32>, Option<i32>) {
    if libc::WIFEXITED(status) {
        (Some(libc::WEXITSTATUS(status)), None)
    } else if libc::WIFSIGNALED(status) {
        (None, Some(libc::WTERMSIG(status)))
    } else {
        (None, None)
    }
}

fn kill_group(pid: libc::pid_t) {
    unsafe {
        // The group may not exist yet if the child has not reached setsid;
        // the direct kill covers that window.
        libc::kill(-pid, libc::SIGKILL);
        libc::kill(pid, libc::SIGKILL);
    }
}

fn set_rlimit(resource: libc::__rlimit_resource_t, soft: u64, hard: u64) -> std::io::Result<()> {
    let lim = libc::rlimit {
        rlim_cur: soft,
        rlim_max: hard,
    };
    if unsafe { libc::setrlimit(resource, &lim) } != 0 {
        return Err(std::io::Error::last_os_error());
    }
    Ok(())
}

fn rusage_cpu_seconds(ru: &libc::rusage) -> f64 {
    let user = ru.ru_utime.tv_sec as f64 + ru.ru_utime.tv_usec as f64 / 1e6;
    let sys = ru.ru_stime.tv_sec as f64 + ru.ru_stime.tv_usec as f64 / 1e6;
    user + sys
}

/// Read a pipe up to `cap` bytes; flags `truncated` and stops reading beyond
/// the cap (the monitor then kills the writer).
fn read_capped(mut src: impl Read, cap: usize, truncated: &AtomicBool) -> Vec<u8> {
    let mut buf = Vec::new();
    let mut chunk = [0u8; 64 * 1024];
    loop {
        match src.read(&mut chunk) {
            Ok(0) => break,
            Ok(n) => {
                let room = cap.saturating_sub(buf.len());
                buf.extend_from_slice(&chunk[..n.min(room)]);
                if n > room {
                    truncated.store(true, Ordering::Relaxed);
                    break;
                }
            }
            Err(_) => break,
        }
    }
    buf
}

/// Cumulative user+system CPU of the process, from /proc/<pid>/stat.
fn read_proc_cpu_seconds(pid: libc::pid_t) -> Option<f64> {
    let text = std::fs::read_to_string(format!("/proc/{pid}/stat")).ok()?;
    // Skip past the comm field, which may contain spaces.
    let rest = text.rsplit_once(')')?.1;
    let fields: Vec<&str> = rest.split_whitespace().collect();
    // Fields after comm: state is index 0, utime is index 11, stime index 12.
    let utime: u64 = fields.get(11)?.parse().ok()?;
    let stime: u64 = fields.get(12)?.parse().ok()?;
    let ticks = unsafe { libc::sysconf(libc::_SC_CLK_TCK) };
    if ticks <= 0 {
        return None;
    }
    Some((utime + stime) as f64 / ticks as f64)
}

/// Current (virtual, resident) memory of the process in bytes.
fn read_proc_memory(pid: libc::pid_t) -> Option<(u64, u64)> {
    let text = std::fs::read_to_string(format!("/proc/{pid}/status")).ok()?;
    let mut vsize = None;
    let mut rss = None;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("VmSize:") {
            vsize = parse_kb(rest);
        } else if let Some(rest) = line.strip_prefix("VmRSS:") {
            rss = parse_kb(rest);
        }
    }
    Some((vsize?, rss?))
}

fn parse_kb(rest: &str) -> Option<u64> {
    rest.trim()
        .trim_end_matches("kB")
        .trim()
        .parse::<u64>()
        .ok()
        .map(|kb| kb * 1024)
}
