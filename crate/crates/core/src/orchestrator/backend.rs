//! Model backends.

use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::OrchestratorError;
use crate::digest::sha256_hex;
use crate::ir::{deobfuscate, extract_reserved, obfuscate, IrUnit};
use crate::limit::Semaphore;

/// Decoding parameters sent with every request. The default is greedy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_new_tokens: u32,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self { temperature: 0.0, top_p: 1.0, max_new_tokens: 4096 }
    }
}

/// One generation request. `input` is the raw phase input that `prompt`
/// was rendered from; only oracle and echo backends look at it.
#[derive(Debug, Clone, Copy)]
pub struct Request<'a> {
    pub prompt: &'a str,
    pub input: &'a str,
    pub params: &'a GenerationParams,
}

pub trait ModelBackend: Send + Sync {
    fn generate(&self, request: &Request<'_>) -> Result<String, OrchestratorError>;
    fn backend_id(&self) -> String;
}

/// Returns its input unchanged.
#[derive(Debug, Clone, Default)]
pub struct EchoBackend;

impl ModelBackend for EchoBackend {
    fn generate(&self, request: &Request<'_>) -> Result<String, OrchestratorError> {
        Ok(request.input.to_string())
    }

    fn backend_id(&self) -> String {
        "echo".into()
    }
}

/// Perfect structure recovery: answers pseudocode with the IR of the
/// matching reference source.
#[derive(Debug, Clone, Default)]
pub struct GroundTruthIrBackend {
    by_input: HashMap<String, String>,
}

impl GroundTruthIrBackend {
    /// Register a (pseudocode, reference source) pair. The IR is produced
    /// with the reserved set taken from the pseudocode.
    pub fn insert(&mut self, pseudo: &str, source: &str) -> Result<IrUnit, OrchestratorError> {
        let unit = obfuscate(source, &extract_reserved(pseudo)).map_err(|e| OrchestratorError::Oracle(e.to_string()))?;
        self.by_input.insert(pseudo.to_string(), unit.ir_text.clone());
        Ok(unit)
    }
}

impl ModelBackend for GroundTruthIrBackend {
    fn generate(&self, request: &Request<'_>) -> Result<String, OrchestratorError> {
        self.by_input
            .get(request.input)
            .cloned()
            .ok_or_else(|| OrchestratorError::Generation("no reference for this pseudocode".into()))
    }

    fn backend_id(&self) -> String {
        "oracle-ir".into()
    }
}

/// Perfect identifier naming: inverts stored rename maps.
#[derive(Debug, Clone, Default)]
pub struct DeobfuscationOracleBackend {
    by_ir: HashMap<String, IrUnit>,
}

impl DeobfuscationOracleBackend {
    pub fn insert(&mut self, unit: IrUnit) {
        self.by_ir.insert(unit.ir_text.clone(), unit);
    }
}

impl ModelBackend for DeobfuscationOracleBackend {
    fn generate(&self, request: &Request<'_>) -> Result<String, OrchestratorError> {
        let unit = self
            .by_ir
            .get(request.input)
            .ok_or_else(|| OrchestratorError::Generation("no rename map for this IR".into()))?;
        deobfuscate(unit).map_err(|e| OrchestratorError::Oracle(e.to_string()))
    }

    fn backend_id(&self) -> String {
        "oracle-deobfuscate".into()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordedResponse {
    pub prompt: String,
    pub text: String,
}

/// Replays responses recorded as JSONL `{"prompt": ..., "text": ...}`.
#[derive(Debug, Clone, Default)]
pub struct RecordedBackend {
    id: String,
    by_prompt: HashMap<String, String>,
}

impl RecordedBackend {
    pub fn from_responses(id: impl Into<String>, responses: impl IntoIterator<Item = RecordedResponse>) -> Self {
        let by_prompt = responses.into_iter().map(|r| (r.prompt, r.text)).collect();
        Self { id: id.into(), by_prompt }
    }

    pub fn load(path: &Path) -> Result<Self, OrchestratorError> {
        let text = std::fs::read_to_string(path)?;
        let mut responses = Vec::new();
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let r: RecordedResponse = serde_json::from_str(line)
                .map_err(|e| OrchestratorError::Config(format!("{}:{}: {e}", path.display(), n + 1)))?;
            responses.push(r);
        }
        Ok(Self::from_responses(format!("recorded:{}", &sha256_hex(&text)[..12]), responses))
    }
}

impl ModelBackend for RecordedBackend {
    fn generate(&self, request: &Request<'_>) -> Result<String, OrchestratorError> {
        self.by_prompt
            .get(request.prompt)
            .cloned()
            .ok_or_else(|| OrchestratorError::Generation("no recorded response for prompt".into()))
    }

    fn backend_id(&self) -> String {
        self.id.clone()
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    prompt: &'a str,
    params: &'a GenerationParams,
}

#[derive(Deserialize)]
struct WireResponse {
    text: String,
}

/// JSON over HTTP: `POST {"prompt", "params"}` answered by `{"text"}`.
pub struct HttpBackend {
    url: String,
    agent: ureq::Agent,
    permits: Semaphore,
}

impl HttpBackend {
    pub fn new(url: impl Into<String>, timeout: Duration, max_in_flight: usize) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        Self { url: url.into(), agent, permits: Semaphore::new(max_in_flight) }
    }
}

impl ModelBackend for HttpBackend {
    fn generate(&self, request: &Request<'_>) -> Result<String, OrchestratorError> {
        let _permit = self.permits.acquire();
        let body = serde_json::to_string(&WireRequest { prompt: request.prompt, params: request.params })
            .expect("request serializes");
        let unavailable = |e: String| OrchestratorError::BackendUnavailable(format!("{}: {e}", self.url));
        let mut resp = self
            .agent
            .post(&self.url)
            .header("content-type", "application/json")
            .send(body)
            .map_err(|e| match e {
                ureq::Error::StatusCode(code) => OrchestratorError::Generation(format!("HTTP status {code}")),
                other => unavailable(other.to_string()),
            })?;
        let raw = resp.body_mut().read_to_string().map_err(|e| unavailable(e.to_string()))?;
        let parsed: WireResponse =
            serde_json::from_str(&raw).map_err(|e| OrchestratorError::Generation(format!("malformed reply: {e}")))?;
        Ok(parsed.text)
    }

    fn backend_id(&self) -> String {
        format!("http:{}", self.url)
    }
}
