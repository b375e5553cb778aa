use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{restore_function_name, MetricsError};
use crate::reward::{synthesize_header, CompilerConfig};
use crate::sandbox::{self, Limits, Termination};
use crate::OptLevel;

/// A `main`-bearing driver that calls the function under test and exits with
/// `expected_exit` when every assertion holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCaseSuite {
    pub harness_source: String,
    #[serde(default)]
    pub expected_exit: i32,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_timeout_ms() -> u64 {
    5_000
}

impl TestCaseSuite {
    pub fn new(harness_source: impl Into<String>) -> Self {
        Self { harness_source: harness_source.into(), expected_exit: 0, timeout_ms: default_timeout_ms() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    None,
    Compile,
    Link,
    Run,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReexecResult {
    pub compiled: bool,
    pub linked: bool,
    pub passed: bool,
    pub exit_code: i32,
    pub stage_failed: Stage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl ReexecResult {
    fn failed(stage: Stage, compiled: bool, linked: bool, exit_code: i32, diagnostic: Option<String>) -> Self {
        Self { compiled, linked, passed: false, exit_code, stage_failed: stage, diagnostic }
    }
}

fn first_lines(bytes: &[u8], dir: &Path) -> Option<String> {
    let s = sandbox::scrub_dir(&String::from_utf8_lossy(bytes), dir);
    let s = s.lines().take(8).collect::<Vec<_>>().join("\n");
    (!s.trim().is_empty()).then_some(s)
}

fn compiler_cmd(config: &CompilerConfig, compiler: &Path, dir: &Path) -> Command {
    let mut cmd = Command::new(compiler);
    cmd.current_dir(dir).args(&config.flags);
    cmd
}

/// Compile the generated function, link it with the suite's harness and run
/// the result. `stage_failed` names the earliest failing stage.
pub fn reexecute(
    gen_src: &str,
    suite: &TestCaseSuite,
    original_name: &str,
    config: &CompilerConfig,
) -> Result<ReexecResult, MetricsError> {
    let compiler = config.ensure_available().map_err(|e| MetricsError::ToolchainMissing(e.to_string()))?;
    let restored = match restore_function_name(gen_src, original_name) {
        Ok(s) => s,
        Err(e) => return Ok(ReexecResult::failed(Stage::Compile, false, false, -1, Some(e.to_string()))),
    };
    let header = synthesize_header(&restored, None);
    let scratch = tempfile::Builder::new().prefix("decompkit-run-").tempdir()?;
    let dir = scratch.path();
    std::fs::write(dir.join("gen.c"), format!("{header}\n{restored}"))?;
    std::fs::write(dir.join("harness.c"), &suite.harness_source)?;

    let mut cc = compiler_cmd(config, &compiler, dir);
    cc.args(["-c", "gen.c", "-o", "gen.o"]);
    let out = sandbox::run(cc, None, config.timeout(), &config.limits)?;
    if !out.termination.success() || !dir.join("gen.o").is_file() {
        return Ok(ReexecResult::failed(Stage::Compile, false, false, out.termination.code(), first_lines(&out.stderr, dir)));
    }

    let mut link = compiler_cmd(config, &compiler, dir);
    link.args(["harness.c", "gen.o", "-o", "prog", "-lm"]);
    let out = sandbox::run(link, None, config.timeout(), &config.limits)?;
    if !out.termination.success() || !dir.join("prog").is_file() {
        return Ok(ReexecResult::failed(Stage::Link, true, false, out.termination.code(), first_lines(&out.stderr, dir)));
    }

    let mut run = Command::new(dir.join("prog"));
    run.current_dir(dir);
    let out = sandbox::run(run, None, Duration::from_millis(suite.timeout_ms), &Limits::untrusted())?;
    let code = out.termination.code();
    Ok(match out.termination {
        Termination::TimedOut => ReexecResult::failed(
            Stage::Timeout,
            true,
            true,
            code,
            Some(format!("timed out after {} ms", suite.timeout_ms)),
        ),
        t if t == Termination::Exited(suite.expected_exit) => ReexecResult {
            compiled: true,
            linked: true,
            passed: true,
            exit_code: code,
            stage_failed: Stage::None,
            diagnostic: None,
        },
        _ => ReexecResult::failed(Stage::Run, true, true, code, first_lines(&out.stderr, dir)),
    })
}

/// Fraction of passing results.
pub fn reexecutability_rate(results: &[ReexecResult]) -> Result<f64, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    Ok(results.iter().filter(|r| r.passed).count() as f64 / results.len() as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassCount {
    pub passed: usize,
    pub total: usize,
}

impl PassCount {
    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.passed as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRates {
    pub per_level: BTreeMap<OptLevel, PassCount>,
    /// Sample-weighted mean over all levels.
    pub overall: f64,
}

pub fn rates_by_level(results: &[(OptLevel, bool)]) -> Result<LevelRates, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut per_level: BTreeMap<OptLevel, PassCount> = BTreeMap::new();
    for &(level, passed) in results {
        let c = per_level.entry(level).or_default();
        c.total += 1;
        c.passed += passed as usize;
    }
    let passed: usize = per_level.values().map(|c| c.passed).sum();
    Ok(LevelRates { per_level, overall: passed as f64 / results.len() as f64 })
}
