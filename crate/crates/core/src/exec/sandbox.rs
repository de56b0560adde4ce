//! Process-level sandbox: fresh working directory, rlimits, CPU and wall
//! watchdog, and resource accounting via `wait4`.
//!
//! Each child runs in its own process group so the watchdog can kill any
//! helpers it spawned. CPU time is polled from `/proc/<pid>/stat` so a
//! CPU-bound child is stopped as soon as it crosses its budget, regardless
//! of how many siblings share the machine. `RLIMIT_CPU` backs this up on
//! platforms without procfs.

use std::io::{Read, Write};
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::path::Path;
use std::process::{Command, ExitStatus, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use super::ExecError;

/// Largest stdout captured before the run is treated as a runtime error.
pub const STDOUT_CAP: usize = 64 << 20;
const STDERR_EXCERPT: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProcessLimits {
    pub cpu_ms: u64,
    pub wall_ms: u64,
    /// Address-space cap; `None` leaves it unlimited (compilers).
    pub memory_mb: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Exited(i32),
    Signaled(i32),
    /// Killed by the watchdog for exceeding the CPU budget.
    CpuLimit,
    /// Killed by the watchdog for exceeding the wall-clock budget.
    WallLimit,
}

#[derive(Debug, Clone)]
pub struct ProcessOutcome {
    pub termination: Termination,
    pub stdout: Vec<u8>,
    pub stdout_truncated: bool,
    pub stderr_excerpt: String,
    pub cpu_time_ms: u64,
    pub wall_time_ms: u64,
    pub peak_memory_mb: u64,
}

impl ProcessOutcome {
    /// True when the run exceeded CPU or wall limits in any way.
    pub fn exceeded_time(&self, limits: &ProcessLimits) -> bool {
        match self.termination {
            Termination::CpuLimit | Termination::WallLimit => true,
            Termination::Signaled(sig) if sig == libc::SIGXCPU => true,
            _ => self.cpu_time_ms > limits.cpu_ms,
        }
    }

    pub fn success(&self) -> bool {
        matches!(self.termination, Termination::Exited(0)) && !self.stdout_truncated
    }
}

fn clock_ticks_per_sec() -> u64 {
    // SAFETY: sysconf has no preconditions.
    let ticks = unsafe { libc::sysconf(libc::_SC_CLK_TCK) };
    if ticks > 0 {
        ticks as u64
    } else {
        100
    }
}

/// utime + stime of a live process, in milliseconds.
fn proc_cpu_ms(pid: i32, ticks_per_sec: u64) -> Option<u64> {
    let stat = std::fs::read_to_string(format!("/proc/{pid}/stat")).ok()?;
    let rest = &stat[stat.rfind(')')? + 1..];
    let fields: Vec<&str> = rest.split_whitespace().collect();
    // fields[0] is the state (field 3); utime/stime are fields 14/15.
    let utime: u64 = fields.get(11)?.parse().ok()?;
    let stime: u64 = fields.get(12)?.parse().ok()?;
    Some((utime + stime) * 1000 / ticks_per_sec)
}

fn timeval_ms(tv: libc::timeval) -> u64 {
    tv.tv_sec as u64 * 1000 + tv.tv_usec as u64 / 1000
}

fn read_capped(mut reader: impl Read, cap: usize) -> (Vec<u8>, bool) {
    let mut out = Vec::new();
    let mut buf = [0u8; 8192];
    let mut truncated = false;
    loop {
        match reader.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => {
                if out.len() < cap {
                    let take = n.min(cap - out.len());
                    out.extend_from_slice(&buf[..take]);
                    truncated |= take < n;
                } else {
                    truncated = true;
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
            Err(_) => break,
        }
    }
    (out, truncated)
}

/// Runs `argv` in `workdir` with `stdin` fed from `input`.
pub fn run_process(
    argv: &[String],
    workdir: &Path,
    input: &[u8],
    env: &[(String, String)],
    limits: &ProcessLimits,
) -> Result<ProcessOutcome, ExecError> {
    let (program, args) = argv
        .split_first()
        .ok_or_else(|| ExecError::Config("empty argv".into()))?;
    let mut cmd = Command::new(program);
    cmd.args(args)
        .current_dir(workdir)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    for (k, v) in env {
        cmd.env(k, v);
    }
    let cpu_secs = limits.cpu_ms.div_ceil(1000) + 1;
    let memory_bytes = limits.memory_mb.map(|mb| mb.saturating_mul(1 << 20));
    // SAFETY: the closure only calls async-signal-safe functions.
    unsafe {
        cmd.pre_exec(move || {
            if libc::setpgid(0, 0) != 0 {
                return Err(std::io::Error::last_os_error());
            }
            let cpu = libc::rlimit {
                rlim_cur: cpu_secs as libc::rlim_t,
                rlim_max: (cpu_secs + 1) as libc::rlim_t,
            };
            libc::setrlimit(libc::RLIMIT_CPU, &cpu);
            let core = libc::rlimit { rlim_cur: 0, rlim_max: 0 };
            libc::setrlimit(libc::RLIMIT_CORE, &core);
            if let Some(bytes) = memory_bytes {
                let mem = libc::rlimit {
                    rlim_cur: bytes as libc::rlim_t,
                    rlim_max: bytes as libc::rlim_t,
                };
                libc::setrlimit(libc::RLIMIT_AS, &mem);
            }
            Ok(())
        });
    }

    let start = Instant::now();
    let mut child = cmd.spawn().map_err(|e| ExecError::Spawn {
        program: program.clone(),
        source: e,
    })?;
    let pid = child.id() as i32;

    let mut stdin = child.stdin.take().expect("stdin piped");
    let stdout = child.stdout.take().expect("stdout piped");
    let stderr = child.stderr.take().expect("stderr piped");
    let input = input.to_vec();
    let writer = thread::spawn(move || {
        // The child may exit without reading; a broken pipe is expected then.
        let _ = stdin.write_all(&input);
    });
    let out_reader = thread::spawn(move || read_capped(stdout, STDOUT_CAP));
    let err_reader = thread::spawn(move || read_capped(stderr, STDERR_EXCERPT));

    let ticks = clock_ticks_per_sec();
    let mut status: libc::c_int = 0;
    // SAFETY: zeroed rusage is a valid out-parameter.
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    let mut killed: Option<Termination> = None;
    let mut sleep = Duration::from_micros(500);
    loop {
        // SAFETY: pid is our child; status and usage are valid pointers.
        let r = unsafe { libc::wait4(pid, &mut status, libc::WNOHANG, &mut usage) };
        if r == pid {
            break;
        }
        if r < 0 {
            let err = std::io::Error::last_os_error();
            if err.kind() == std::io::ErrorKind::Interrupted {
                continue;
            }
            return Err(ExecError::Sandbox(format!("wait4 failed: {err}")));
        }
        if killed.is_none() {
            let over_cpu = proc_cpu_ms(pid, ticks).is_some_and(|ms| ms >= limits.cpu_ms);
            let over_wall = start.elapsed().as_millis() as u64 >= limits.wall_ms;
            if over_cpu || over_wall {
                killed = Some(if over_cpu { Termination::CpuLimit } else { Termination::WallLimit });
                // SAFETY: signalling our own process group.
                unsafe {
                    libc::killpg(pid, libc::SIGKILL);
                }
            }
        }
        thread::sleep(sleep);
        sleep = (sleep * 2).min(Duration::from_millis(5));
    }
    let wall_time_ms = start.elapsed().as_millis() as u64;
    // Reap stragglers that inherited the pipes.
    // SAFETY: the group may already be gone; ESRCH is harmless.
    unsafe {
        libc::killpg(pid, libc::SIGKILL);
    }
    drop(child);
    let _ = writer.join();
    let (stdout, stdout_truncated) = out_reader.join().unwrap_or_default();
    let (stderr, _) = err_reader.join().unwrap_or_default();

    let exit = ExitStatus::from_raw(status);
    let termination = match killed {
        Some(t) => t,
        None => match (exit.code(), exit.signal()) {
            (Some(code), _) => Termination::Exited(code),
            (None, Some(sig)) => Termination::Signaled(sig),
            (None, None) => Termination::Signaled(0),
        },
    };
    Ok(ProcessOutcome {
        termination,
        stdout,
        stdout_truncated,
        stderr_excerpt: String::from_utf8_lossy(&stderr).into_owned(),
        cpu_time_ms: timeval_ms(usage.ru_utime) + timeval_ms(usage.ru_stime),
        wall_time_ms,
        peak_memory_mb: (usage.ru_maxrss as u64).div_ceil(1024),
    })
}
