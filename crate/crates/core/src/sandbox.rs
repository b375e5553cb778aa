//! Running untrusted or potentially slow child processes.
//!
//! Each child runs in its own process group under `setrlimit` limits and an
//! optional private network namespace, and is killed (whole group) when the
//! wall-clock timeout expires.

use std::ffi::OsStr;
use std::io::{self, Read, Write};
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub cpu_seconds: Option<u64>,
    pub address_space_bytes: Option<u64>,
    pub file_size_bytes: Option<u64>,
    /// Try to move the child into an empty network namespace. Failure to do
    /// so (no privileges) is ignored.
    pub isolate_network: bool,
}

impl Limits {
    pub fn none() -> Self {
        Self { cpu_seconds: None, address_space_bytes: None, file_size_bytes: None, isolate_network: false }
    }

    /// Limits for compiler invocations.
    pub fn compiler() -> Self {
        Self {
            cpu_seconds: Some(60),
            address_space_bytes: Some(4 << 30),
            file_size_bytes: Some(256 << 20),
            isolate_network: false,
        }
    }

    /// Limits for running generated programs.
    pub fn untrusted() -> Self {
        Self {
            cpu_seconds: Some(10),
            address_space_bytes: Some(1 << 30),
            file_size_bytes: Some(16 << 20),
            isolate_network: true,
        }
    }
}

impl Default for Limits {
    fn default() -> Self {
        Self::compiler()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Exited(i32),
    Signaled(i32),
    TimedOut,
}

impl Termination {
    /// Shell-style code: exit status, or 128 + signal number.
    pub fn code(self) -> i32 {
        match self {
            Termination::Exited(c) => c,
            Termination::Signaled(s) => 128 + s,
            Termination::TimedOut => 124,
        }
    }

    pub fn success(self) -> bool {
        self == Termination::Exited(0)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub termination: Termination,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub duration: Duration,
}

fn apply_limits(limits: &Limits) -> io::Result<()> {
    // Runs between fork and exec: only async-signal-safe calls.
    unsafe {
        if libc::setpgid(0, 0) != 0 {
            return Err(io::Error::last_os_error());
        }
        let set = |res, v: Option<u64>| -> io::Result<()> {
            if let Some(v) = v {
                let lim = libc::rlimit { rlim_cur: v as libc::rlim_t, rlim_max: v as libc::rlim_t };
                if libc::setrlimit(res, &lim) != 0 {
                    return Err(io::Error::last_os_error());
                }
            }
            Ok(())
        };
        set(libc::RLIMIT_CPU, limits.cpu_seconds)?;
        set(libc::RLIMIT_AS, limits.address_space_bytes)?;
        set(libc::RLIMIT_FSIZE, limits.file_size_bytes)?;
        set(libc::RLIMIT_CORE, Some(0))?;
        if limits.isolate_network {
            let _ = libc::unshare(libc::CLONE_NEWNET);
        }
    }
    Ok(())
}

fn drain<R: Read + Send + 'static>(mut r: R) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = r.read_to_end(&mut buf);
        buf
    })
}

/// Run `cmd` to completion or until `timeout` elapses.
pub fn run(mut cmd: Command, stdin: Option<&[u8]>, timeout: Duration, limits: &Limits) -> io::Result<RunOutput> {
    let limits = limits.clone();
    unsafe {
        cmd.pre_exec(move || apply_limits(&limits));
    }
    cmd.stdin(if stdin.is_some() { Stdio::piped() } else { Stdio::null() })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());

    let start = Instant::now();
    let mut child = cmd.spawn()?;
    let pid = child.id() as libc::pid_t;
    if let (Some(data), Some(mut pipe)) = (stdin, child.stdin.take()) {
        let data = data.to_vec();
        thread::spawn(move || {
            let _ = pipe.write_all(&data);
        });
    }
    let out = drain(child.stdout.take().expect("piped stdout"));
    let err = drain(child.stderr.take().expect("piped stderr"));

    let mut sleep = Duration::from_millis(1);
    let termination = loop {
        if let Some(status) = child.try_wait()? {
            break match (status.code(), status.signal()) {
                (Some(c), _) => Termination::Exited(c),
                (None, Some(s)) => Termination::Signaled(s),
                (None, None) => Termination::Exited(-1),
            };
        }
        if start.elapsed() >= timeout {
            unsafe {
                libc::kill(-pid, libc::SIGKILL);
            }
            let _ = child.kill();
            let _ = child.wait();
            break Termination::TimedOut;
        }
        thread::sleep(sleep);
        sleep = (sleep * 2).min(Duration::from_millis(20));
    };
    // Grandchildren may hold the pipes open; the group kill above covers the
    // timeout case, and normal exits close them.
    unsafe {
        libc::kill(-pid, libc::SIGKILL);
    }
    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();
    Ok(RunOutput { termination, stdout, stderr, duration: start.elapsed() })
}

/// Resolve a program name against `PATH` the way `execvp` would.
pub fn find_program(program: impl AsRef<OsStr>) -> Option<PathBuf> {
    let program = Path::new(program.as_ref());
    if program.components().count() > 1 {
        return program.is_file().then(|| program.to_path_buf());
    }
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path)
        .map(|dir| dir.join(program))
        .find(|candidate| candidate.is_file())
}

/// Drop `dir/` prefixes so that diagnostics do not depend on the scratch
/// directory name.
pub fn scrub_dir(text: &str, dir: &Path) -> String {
    let prefix = format!("{}/", dir.display());
    text.replace(&prefix, "")
}
