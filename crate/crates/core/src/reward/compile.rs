use std::path::PathBuf;
use std::process::Command;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::RewardError;
use crate::digest::sha256_hex;
use crate::sandbox::{self, Limits, Termination};

/// Environment variable overriding the C compiler.
pub const CC_ENV: &str = "DECOMPKIT_CC";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompilerConfig {
    pub path: PathBuf,
    /// Flags placed before the input file. `-c -o <obj>` is always added.
    pub flags: Vec<String>,
    pub timeout_ms: u64,
    pub limits: Limits,
}

impl Default for CompilerConfig {
    fn default() -> Self {
        Self {
            path: PathBuf::from("cc"),
            flags: vec!["-std=gnu11".into(), "-w".into()],
            timeout_ms: 10_000,
            limits: Limits::compiler(),
        }
    }
}

impl CompilerConfig {
    /// Defaults, with the compiler path taken from `DECOMPKIT_CC` when set.
    pub fn from_env() -> Self {
        let mut cfg = Self::default();
        if let Some(cc) = std::env::var_os(CC_ENV) {
            cfg.path = PathBuf::from(cc);
        }
        cfg
    }

    pub fn with_path(mut self, path: impl Into<PathBuf>) -> Self {
        self.path = path.into();
        self
    }

    pub fn compiler_id(&self) -> String {
        self.path.display().to_string()
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    pub fn ensure_available(&self) -> Result<PathBuf, RewardError> {
        sandbox::find_program(&self.path).ok_or_else(|| RewardError::ToolchainMissing(self.compiler_id()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileVerdict {
    pub compiled: bool,
    pub compiler_id: String,
    pub flags: Vec<String>,
    pub exit_code: i32,
    pub stderr_digest: String,
    pub duration_ms: u64,
    /// First lines of compiler stderr, or the timeout notice.
    pub diagnostic: Option<String>,
}

const DIAGNOSTIC_LINES: usize = 8;

/// Compile `header + ir_text` to an object file in a private scratch
/// directory. No linking.
pub fn check_compilable(ir_text: &str, header: &str, config: &CompilerConfig) -> Result<CompileVerdict, RewardError> {
    let compiler = config.ensure_available()?;
    let scratch = tempfile::Builder::new().prefix("decompkit-cc-").tempdir()?;
    let src = scratch.path().join("unit.c");
    let obj = scratch.path().join("unit.o");
    let mut text = String::with_capacity(header.len() + ir_text.len() + 1);
    text.push_str(header);
    if !header.is_empty() && !header.ends_with('\n') {
        text.push('\n');
    }
    text.push_str(ir_text);
    std::fs::write(&src, text)?;

    let mut cmd = Command::new(compiler);
    cmd.current_dir(scratch.path())
        .args(&config.flags)
        .arg("-c")
        .arg(&src)
        .arg("-o")
        .arg(&obj);
    let out = sandbox::run(cmd, None, config.timeout(), &config.limits)?;

    let timed_out = out.termination == Termination::TimedOut;
    let exit_code = out.termination.code();
    let compiled = out.termination.success() && obj.is_file();
    let stderr = sandbox::scrub_dir(&String::from_utf8_lossy(&out.stderr), scratch.path());
    let diagnostic = if timed_out {
        Some(format!("compile timed out after {} ms", config.timeout_ms))
    } else if !stderr.trim().is_empty() {
        Some(stderr.lines().take(DIAGNOSTIC_LINES).collect::<Vec<_>>().join("\n"))
    } else {
        None
    };
    Ok(CompileVerdict {
        compiled,
        compiler_id: config.compiler_id(),
        flags: config.flags.clone(),
        exit_code,
        stderr_digest: sha256_hex(stderr.as_bytes()),
        duration_ms: out.duration.as_millis() as u64,
        diagnostic,
    })
}
