use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::RewardError;
use crate::digest::{fnv1a64, mix64};
use crate::lexer;

/// Source of fixed-dimension text embeddings.
///
/// Implementations must be deterministic and must never return the zero
/// vector for non-empty input.
pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<f64>, RewardError>;
    fn provider_id(&self) -> String;
    fn dimension(&self) -> usize;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for &P {
    fn embed(&self, text: &str) -> Result<Vec<f64>, RewardError> {
        (**self).embed(text)
    }
    fn provider_id(&self) -> String {
        (**self).provider_id()
    }
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn embed(&self, text: &str) -> Result<Vec<f64>, RewardError> {
        (**self).embed(text)
    }
    fn provider_id(&self) -> String {
        (**self).provider_id()
    }
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "embedding dimensions differ");
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

pub fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Offline baseline: token counts hashed into a fixed number of buckets with
/// a random sign per token (feature hashing), then unit-normalized.
#[derive(Debug, Clone)]
pub struct HashedTokenProvider {
    dimension: usize,
}

pub const HASHED_PROVIDER_VERSION: &str = "hashed-token-v1";

impl HashedTokenProvider {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        Self { dimension }
    }
}

impl Default for HashedTokenProvider {
    fn default() -> Self {
        Self::new(1024)
    }
}

impl EmbeddingProvider for HashedTokenProvider {
    fn embed(&self, text: &str) -> Result<Vec<f64>, RewardError> {
        let mut v = vec![0.0; self.dimension];
        for tok in lexer::code_tokens(text) {
            let h = mix64(fnv1a64(tok.text.as_bytes()));
            let bucket = (h % self.dimension as u64) as usize;
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            v[bucket] += sign;
        }
        // Cancellation can zero the vector; fall back to the raw bytes so the
        // non-zero contract holds for any non-empty input.
        if v.iter().all(|x| *x == 0.0) && !text.is_empty() {
            let h = mix64(fnv1a64(text.as_bytes()));
            v[(h % self.dimension as u64) as usize] = 1.0;
        }
        normalize(&mut v);
        Ok(v)
    }

    fn provider_id(&self) -> String {
        format!("{HASHED_PROVIDER_VERSION}/{}", self.dimension)
    }

    fn dimension(&self) -> usize {
        self.dimension
    }
}

/// Remote embedding service: `POST {"text": ...}` answered with
/// `{"vector": [...]}`.
#[derive(Debug, Clone)]
pub struct HttpEmbeddingProvider {
    url: String,
    dimension: usize,
    agent: ureq::Agent,
}

pub const EMBEDDING_URL_ENV: &str = "DECOMPKIT_EMBEDDING_URL";

#[derive(Serialize)]
struct EmbedRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vector: Vec<f64>,
}

impl HttpEmbeddingProvider {
    pub fn new(url: impl Into<String>, dimension: usize, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        Self { url: url.into(), dimension, agent }
    }
}

impl EmbeddingProvider for HttpEmbeddingProvider {
    fn embed(&self, text: &str) -> Result<Vec<f64>, RewardError> {
        let unavailable = |e: String| RewardError::ProviderUnavailable(format!("{}: {e}", self.url));
        let body = serde_json::to_string(&EmbedRequest { text }).expect("request serializes");
        let mut resp = self
            .agent
            .post(&self.url)
            .header("content-type", "application/json")
            .send(body)
            .map_err(|e| unavailable(e.to_string()))?;
        let raw = resp.body_mut().read_to_string().map_err(|e| unavailable(e.to_string()))?;
        let parsed: EmbedResponse =
            serde_json::from_str(&raw).map_err(|e| unavailable(format!("malformed reply: {e}")))?;
        if parsed.vector.len() != self.dimension {
            return Err(unavailable(format!(
                "expected dimension {}, got {}",
                self.dimension,
                parsed.vector.len()
            )));
        }
        if parsed.vector.iter().all(|x| *x == 0.0) {
            return Err(unavailable("zero vector".into()));
        }
        Ok(parsed.vector)
    }

    fn provider_id(&self) -> String {
        format!("http:{}", self.url)
    }

    fn dimension(&self) -> usize {
        self.dimension
    }
}
