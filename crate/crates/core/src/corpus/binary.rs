//! Multi-compiler, multi-level compilation followed by symbol stripping.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::digest::sha256_hex;
use crate::sandbox::{self, Limits};
use crate::OptLevel;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Toolchain {
    /// Short name recorded in artifacts, e.g. `gcc`.
    pub id: String,
    pub path: PathBuf,
    #[serde(default)]
    pub flags: Vec<String>,
}

impl Toolchain {
    pub fn new(id: &str) -> Self {
        Self { id: id.to_string(), path: PathBuf::from(id), flags: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StripConfig {
    pub enabled: bool,
    pub path: PathBuf,
}

impl Default for StripConfig {
    fn default() -> Self {
        Self { enabled: true, path: PathBuf::from("strip") }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryArtifact {
    pub source_stem: String,
    pub compiler_id: String,
    pub opt_level: OptLevel,
    pub path: PathBuf,
    /// SHA-256 of the final (possibly stripped) object bytes.
    pub digest: String,
    pub stripped: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellFailure {
    pub source_stem: String,
    pub compiler_id: String,
    pub opt_level: OptLevel,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileOutcome {
    pub artifacts: Vec<BinaryArtifact>,
    pub failures: Vec<CellFailure>,
}

const TIMEOUT: Duration = Duration::from_secs(60);

fn first_line(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).lines().next().unwrap_or("").to_string()
}

fn build_cell(
    source_file: &Path,
    stem: &str,
    tc: &Toolchain,
    level: OptLevel,
    out_dir: &Path,
    strip: &StripConfig,
) -> Result<BinaryArtifact, String> {
    let compiler = sandbox::find_program(&tc.path).ok_or_else(|| format!("compiler {} not found", tc.path.display()))?;
    let obj = out_dir.join(format!("{stem}.{}.{}.o", tc.id, level));
    let mut cmd = Command::new(compiler);
    cmd.args(&tc.flags).arg(level.flag()).arg("-c").arg(source_file).arg("-o").arg(&obj);
    let out = sandbox::run(cmd, None, TIMEOUT, &Limits::compiler()).map_err(|e| e.to_string())?;
    if !out.termination.success() || !obj.is_file() {
        return Err(format!("compile failed ({}): {}", out.termination.code(), first_line(&out.stderr)));
    }
    if strip.enabled {
        let prog = sandbox::find_program(&strip.path)
            .ok_or_else(|| format!("strip tool {} not found", strip.path.display()))?;
        let mut cmd = Command::new(prog);
        cmd.arg("--strip-all").arg(&obj);
        let out = sandbox::run(cmd, None, TIMEOUT, &Limits::compiler()).map_err(|e| e.to_string())?;
        if !out.termination.success() {
            return Err(format!("strip failed: {}", first_line(&out.stderr)));
        }
    }
    let bytes = std::fs::read(&obj).map_err(|e| e.to_string())?;
    Ok(BinaryArtifact {
        source_stem: stem.to_string(),
        compiler_id: tc.id.clone(),
        opt_level: level,
        path: obj,
        digest: sha256_hex(bytes),
        stripped: strip.enabled,
    })
}

/// Build one object per (compiler, level) cell into `out_dir`. A failing
/// cell is reported and does not affect the others.
pub fn compile_and_strip(
    source_file: &Path,
    levels: &[OptLevel],
    compilers: &[Toolchain],
    out_dir: &Path,
    strip: &StripConfig,
) -> std::io::Result<CompileOutcome> {
    std::fs::create_dir_all(out_dir)?;
    let stem = source_file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut outcome = CompileOutcome::default();
    for tc in compilers {
        for &level in levels {
            match build_cell(source_file, &stem, tc, level, out_dir, strip) {
                Ok(a) => outcome.artifacts.push(a),
                Err(reason) => {
                    log::info!("{stem} [{} {level}]: {reason}", tc.id);
                    outcome.failures.push(CellFailure {
                        source_stem: stem.clone(),
                        compiler_id: tc.id.clone(),
                        opt_level: level,
                        reason,
                    })
                }
            }
        }
    }
    Ok(outcome)
}
