//! LLM-as-judge scoring of identifier quality.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::MetricsError;
use crate::limit::Semaphore;

pub const PROMPT_TEMPLATE: &str = include_str!("../../data/judge_prompt_v1.txt");
pub const PROMPT_ID: &str = "judge-prompt-v1";

pub const JUDGE_URL_ENV: &str = "DECOMPKIT_JUDGE_URL";
pub const JUDGE_KEY_ENV: &str = "DECOMPKIT_JUDGE_KEY";
pub const JUDGE_MODEL_ENV: &str = "DECOMPKIT_JUDGE_MODEL";

/// A chat model that answers one prompt with one reply.
pub trait JudgeClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, MetricsError>;
    fn model_id(&self) -> String;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeScore {
    pub rating: u8,
    pub rationale_text: String,
    pub judge_model_id: String,
}

pub fn render_prompt(gen_src: &str, ref_src: &str) -> String {
    PROMPT_TEMPLATE.replace("{{GENERATED}}", gen_src).replace("{{REFERENCE}}", ref_src)
}

/// Extract the rating from the last `RATING: n` line of a reply.
pub fn parse_rating(reply: &str) -> Option<u8> {
    reply.lines().rev().find_map(|line| {
        let line = line.trim().trim_matches('*').trim();
        let (key, value) = line.split_once(':')?;
        if !key.trim().eq_ignore_ascii_case("rating") {
            return None;
        }
        let value = value.trim().trim_matches('*').trim();
        let n: u8 = value.split('/').next()?.trim().parse().ok()?;
        (1..=5).contains(&n).then_some(n)
    })
}

/// Ask the judge to rate `gen_src` against `ref_src`. Unparseable replies
/// are retried; `attempts` counts the first request.
pub fn judge_identifier_quality(
    gen_src: &str,
    ref_src: &str,
    client: &dyn JudgeClient,
    attempts: usize,
) -> Result<JudgeScore, MetricsError> {
    let prompt = render_prompt(gen_src, ref_src);
    let attempts = attempts.max(1);
    for _ in 0..attempts {
        let reply = client.complete(&prompt)?;
        if let Some(rating) = parse_rating(&reply) {
            return Ok(JudgeScore { rating, rationale_text: reply, judge_model_id: client.model_id() });
        }
    }
    Err(MetricsError::RatingUnparseable { attempts })
}

/// Limits the number of in-flight requests to the wrapped client.
pub struct ConcurrencyCap<C> {
    inner: C,
    permits: Semaphore,
}

impl<C> ConcurrencyCap<C> {
    pub fn new(inner: C, max: usize) -> Self {
        Self { inner, permits: Semaphore::new(max) }
    }
}

impl<C: JudgeClient> JudgeClient for ConcurrencyCap<C> {
    fn complete(&self, prompt: &str) -> Result<String, MetricsError> {
        let _permit = self.permits.acquire();
        self.inner.complete(prompt)
    }

    fn model_id(&self) -> String {
        self.inner.model_id()
    }
}

/// OpenAI-compatible chat-completions endpoint.
pub struct HttpJudgeClient {
    url: String,
    api_key: Option<String>,
    model: String,
    agent: ureq::Agent,
}

impl HttpJudgeClient {
    pub fn new(url: impl Into<String>, api_key: Option<String>, model: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        Self { url: url.into(), api_key, model: model.into(), agent }
    }

    /// Configure from `DECOMPKIT_JUDGE_URL`, `_KEY` and `_MODEL`.
    pub fn from_env() -> Result<Self, MetricsError> {
        let url = std::env::var(JUDGE_URL_ENV)
            .map_err(|_| MetricsError::JudgeUnavailable(format!("{JUDGE_URL_ENV} is not set")))?;
        let model = std::env::var(JUDGE_MODEL_ENV).unwrap_or_else(|_| "judge".into());
        Ok(Self::new(url, std::env::var(JUDGE_KEY_ENV).ok(), model, Duration::from_secs(120)))
    }
}

impl JudgeClient for HttpJudgeClient {
    fn complete(&self, prompt: &str) -> Result<String, MetricsError> {
        let unavailable = |e: String| MetricsError::JudgeUnavailable(format!("{}: {e}", self.url));
        let body = json!({
            "model": self.model,
            "temperature": 0,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut req = self.agent.post(&self.url).header("content-type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send(body.to_string()).map_err(|e| unavailable(e.to_string()))?;
        let raw = resp.body_mut().read_to_string().map_err(|e| unavailable(e.to_string()))?;
        let v: serde_json::Value = serde_json::from_str(&raw).map_err(|e| unavailable(e.to_string()))?;
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| unavailable("reply has no message content".into()))
    }

    fn model_id(&self) -> String {
        self.model.clone()
    }
}
