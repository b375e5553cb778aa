//! Pairing binaries with decompiler pseudocode.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{BinaryArtifact, CorpusError};
use crate::sandbox::{self, Limits};

/// Where pseudocode comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PseudoProvider {
    /// Precomputed files looked up, in order, as `<digest>.txt`,
    /// `<stem>.<compiler>.<level>.txt` and `<stem>.txt`.
    Offline { dir: PathBuf },
    /// Headless decompiler run per binary. `{binary}` in any argument is
    /// replaced by the object path; stdout is the pseudocode.
    Tool {
        command: Vec<String>,
        #[serde(default = "default_tool_timeout")]
        timeout_ms: u64,
    },
}

fn default_tool_timeout() -> u64 {
    120_000
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unpaired {
    pub digest: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct IngestOutcome {
    pub paired: Vec<(BinaryArtifact, String)>,
    pub unpaired: Vec<Unpaired>,
}

impl PseudoProvider {
    pub fn check(&self) -> Result<(), CorpusError> {
        match self {
            PseudoProvider::Offline { dir } if !dir.is_dir() => {
                Err(CorpusError::ProviderUnavailable(format!("{} is not a directory", dir.display())))
            }
            PseudoProvider::Tool { command, .. } => match command.first() {
                None => Err(CorpusError::ProviderUnavailable("empty tool command".into())),
                Some(p) if sandbox::find_program(p).is_none() => {
                    Err(CorpusError::ProviderUnavailable(format!("tool {p} not found")))
                }
                Some(_) => Ok(()),
            },
            _ => Ok(()),
        }
    }

    fn lookup(&self, a: &BinaryArtifact) -> Result<String, String> {
        match self {
            PseudoProvider::Offline { dir } => {
                let candidates = [
                    format!("{}.txt", a.digest),
                    format!("{}.{}.{}.txt", a.source_stem, a.compiler_id, a.opt_level),
                    format!("{}.txt", a.source_stem),
                ];
                candidates
                    .iter()
                    .map(|c| dir.join(c))
                    .find(|p| p.is_file())
                    .ok_or_else(|| "no pseudocode file".to_string())
                    .and_then(|p| read_text(&p))
            }
            PseudoProvider::Tool { command, timeout_ms } => {
                let binary = a.path.to_string_lossy();
                let args: Vec<String> = command.iter().map(|c| c.replace("{binary}", &binary)).collect();
                let (prog, rest) = args.split_first().ok_or("empty tool command")?;
                let mut cmd = Command::new(prog);
                cmd.args(rest);
                let out = sandbox::run(cmd, None, Duration::from_millis(*timeout_ms), &Limits::compiler())
                    .map_err(|e| e.to_string())?;
                if !out.termination.success() {
                    return Err(format!("decompiler exited with {}", out.termination.code()));
                }
                String::from_utf8(out.stdout).map_err(|_| "decompiler output is not UTF-8".to_string())
            }
        }
    }
}

fn read_text(p: &Path) -> Result<String, String> {
    std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))
}

/// Pair every artifact with its pseudocode. Missing or empty pseudocode
/// drops the artifact with a reason.
pub fn ingest_pseudocode(artifacts: &[BinaryArtifact], provider: &PseudoProvider) -> Result<IngestOutcome, CorpusError> {
    provider.check()?;
    let mut outcome = IngestOutcome::default();
    for a in artifacts {
        match provider.lookup(a) {
            Ok(text) if !text.trim().is_empty() => outcome.paired.push((a.clone(), text)),
            Ok(_) => outcome.unpaired.push(Unpaired { digest: a.digest.clone(), reason: "empty pseudocode".into() }),
            Err(reason) => outcome.unpaired.push(Unpaired { digest: a.digest.clone(), reason }),
        }
    }
    Ok(outcome)
}
