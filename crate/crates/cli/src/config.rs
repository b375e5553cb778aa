//! Global configuration file and environment overrides.
//!
//! Every section is optional. Relative paths are resolved against the
//! directory holding the config file (or the working directory when no file
//! is given).

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use decompkit::corpus::CorpusConfig;
use decompkit::metrics::{HttpJudgeClient, JUDGE_KEY_ENV, JUDGE_MODEL_ENV, JUDGE_URL_ENV};
use decompkit::orchestrator::{GenerationParams, Preset};
use decompkit::reward::{CompilerConfig, EmbeddingProvider, HashedTokenProvider, HttpEmbeddingProvider, EMBEDDING_URL_ENV};
use serde::Deserialize;

pub const PHASE1_URL_ENV: &str = "DECOMPKIT_PHASE1_URL";
pub const PHASE2_URL_ENV: &str = "DECOMPKIT_PHASE2_URL";
pub const STRIP_ENV: &str = "DECOMPKIT_STRIP";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    #[serde(default)]
    pub compiler: Option<CompilerConfig>,
    #[serde(default)]
    pub embedding: EmbeddingSection,
    #[serde(default)]
    pub judge: Option<JudgeSection>,
    #[serde(default)]
    pub corpus: Option<CorpusConfig>,
    #[serde(default)]
    pub pipeline: Option<PipelineSection>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSection {
    pub url: Option<String>,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default = "default_http_timeout_ms")]
    pub timeout_ms: u64,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        Self { url: None, dimension: default_dimension(), timeout_ms: default_http_timeout_ms() }
    }
}

fn default_dimension() -> usize {
    1024
}

fn default_http_timeout_ms() -> u64 {
    60_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgeSection {
    pub url: String,
    pub model: String,
    #[serde(default)]
    pub api_key: Option<String>,
    #[serde(default = "default_http_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_attempts")]
    pub attempts: usize,
}

fn default_attempts() -> usize {
    3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BackendSpec {
    Echo,
    /// Ground-truth IR looked up from the benchmark references.
    OracleIr,
    /// Inverts the rename maps produced for `oracle-ir`.
    OracleDeobfuscate,
    Recorded {
        path: PathBuf,
    },
    Http {
        #[serde(default)]
        url: Option<String>,
        #[serde(default = "default_http_timeout_ms")]
        timeout_ms: u64,
        #[serde(default = "default_in_flight")]
        max_in_flight: usize,
    },
}

fn default_in_flight() -> usize {
    4
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    pub bench_dir: PathBuf,
    pub preset: Preset,
    pub out_dir: PathBuf,
    pub phase1: BackendSpec,
    #[serde(default)]
    pub phase2: Option<BackendSpec>,
    #[serde(default)]
    pub params: GenerationParams,
    #[serde(default)]
    pub workers: usize,
    /// Drop benchmark samples whose reference fails its own harness.
    #[serde(default = "yes")]
    pub validate: bool,
}

fn yes() -> bool {
    true
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl AppConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self { base_dir: PathBuf::from("."), ..Self::default() });
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: AppConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        let base = cfg.base_dir.clone();
        if let Some(c) = cfg.corpus.take() {
            cfg.corpus = Some(c.rebase(&base));
        }
        if let Some(p) = cfg.pipeline.as_mut() {
            resolve(&base, &mut p.bench_dir);
            resolve(&base, &mut p.out_dir);
            for spec in [Some(&mut p.phase1), p.phase2.as_mut()].into_iter().flatten() {
                if let BackendSpec::Recorded { path } = spec {
                    resolve(&base, path);
                }
            }
        }
        Ok(cfg)
    }

    /// Config file settings, then `DECOMPKIT_CC`.
    pub fn compiler(&self) -> CompilerConfig {
        let mut cfg = self.compiler.clone().unwrap_or_default();
        if let Some(cc) = std::env::var_os(decompkit::reward::CC_ENV) {
            cfg.path = PathBuf::from(cc);
        }
        cfg
    }

    /// HTTP embeddings when a URL is configured (environment first),
    /// otherwise the offline hashed-token baseline.
    pub fn embedding_provider(&self) -> Box<dyn EmbeddingProvider> {
        let e = &self.embedding;
        let url = std::env::var(EMBEDDING_URL_ENV).ok().or_else(|| e.url.clone());
        match url {
            Some(url) => Box::new(HttpEmbeddingProvider::new(url, e.dimension, Duration::from_millis(e.timeout_ms))),
            None => Box::new(HashedTokenProvider::new(e.dimension)),
        }
    }

    /// A judge only when configured; the environment takes precedence.
    pub fn judge(&self) -> Result<Option<(HttpJudgeClient, usize)>> {
        if std::env::var_os(JUDGE_URL_ENV).is_some() {
            let attempts = self.judge.as_ref().map_or(default_attempts(), |j| j.attempts);
            return Ok(Some((HttpJudgeClient::from_env()?, attempts)));
        }
        Ok(self.judge.as_ref().map(|j| {
            let key = std::env::var(JUDGE_KEY_ENV).ok().or_else(|| j.api_key.clone());
            let model = std::env::var(JUDGE_MODEL_ENV).unwrap_or_else(|_| j.model.clone());
            (HttpJudgeClient::new(&j.url, key, model, Duration::from_millis(j.timeout_ms)), j.attempts)
        }))
    }

    pub fn corpus(&self) -> Result<CorpusConfig> {
        let Some(mut c) = self.corpus.clone() else {
            bail!("`corpus build` needs a [corpus] section in the config file");
        };
        if let Some(strip) = std::env::var_os(STRIP_ENV) {
            c.strip.path = PathBuf::from(strip);
        }
        Ok(c)
    }

    pub fn pipeline(&self) -> Result<PipelineSection> {
        self.pipeline.clone().context("`pipeline run` needs a [pipeline] section in the config file")
    }
}
