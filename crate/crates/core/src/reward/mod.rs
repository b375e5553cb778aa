//! RL reward functions.
//!
//! The structure reward gates on compilability of the generated IR and adds
//! the Jaccard overlap of placeholder sets; the identifier reward is the
//! cosine similarity of embeddings of generated and reference source.

mod compile;
mod embedding;
mod header;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use compile::{check_compilable, CompileVerdict, CompilerConfig, CC_ENV};
pub use embedding::{
    cosine, normalize, EmbeddingProvider, HashedTokenProvider, HttpEmbeddingProvider, EMBEDDING_URL_ENV,
    HASHED_PROVIDER_VERSION,
};
pub use header::{synthesize_header, synthesize_with};

use crate::ir::extract_placeholder_set;

#[derive(Debug, thiserror::Error)]
pub enum RewardError {
    #[error("C compiler not found: {0}")]
    ToolchainMissing(String),
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("empty text passed to identifier reward")]
    EmptyText,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RewardError {
    /// Errors that abort a whole batch rather than a single record.
    pub fn is_fatal(&self) -> bool {
        matches!(self, RewardError::ToolchainMissing(_) | RewardError::ProviderUnavailable(_))
    }
}

/// `|gen ∩ ref| / |gen ∪ ref|`, with two empty sets counting as identical.
pub fn placeholder_jaccard<T: Ord>(gen: &BTreeSet<T>, reference: &BTreeSet<T>) -> f64 {
    let union = gen.union(reference).count();
    if union == 0 {
        return 1.0;
    }
    gen.intersection(reference).count() as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReward {
    pub r_placeholder: f64,
    pub r_structure: f64,
    pub verdict: CompileVerdict,
    pub gen_set: BTreeSet<String>,
    pub ref_set: BTreeSet<String>,
}

/// Compile-gated structure reward for one generated IR against the
/// ground-truth IR.
pub fn structure_reward(
    gen_ir: &str,
    ref_ir: &str,
    reference_header: Option<&str>,
    config: &CompilerConfig,
) -> Result<StructureReward, RewardError> {
    let header = synthesize_header(gen_ir, reference_header);
    let verdict = check_compilable(gen_ir, &header, config)?;
    let gen_set = extract_placeholder_set(gen_ir);
    let ref_set = extract_placeholder_set(ref_ir);
    let r_placeholder = placeholder_jaccard(&gen_set, &ref_set);
    let r_structure = if verdict.compiled { 1.0 + r_placeholder } else { 0.0 };
    Ok(StructureReward { r_placeholder, r_structure, verdict, gen_set, ref_set })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifierReward {
    pub r_identifier: f64,
    pub e_gen: Vec<f64>,
    pub e_src: Vec<f64>,
    pub provider_id: String,
}

pub fn identifier_reward(
    gen_src: &str,
    ref_src: &str,
    provider: &dyn EmbeddingProvider,
) -> Result<IdentifierReward, RewardError> {
    if gen_src.is_empty() || ref_src.is_empty() {
        return Err(RewardError::EmptyText);
    }
    let e_gen = provider.embed(gen_src)?;
    let e_src = provider.embed(ref_src)?;
    Ok(IdentifierReward { r_identifier: cosine(&e_gen, &e_src), e_gen, e_src, provider_id: provider.provider_id() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardMode {
    Structure,
    Identifier,
}

/// One (generated, reference) pair. `reference_header` only matters in
/// structure mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardPair {
    pub id: String,
    pub generated: String,
    pub reference: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_header: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardRecord {
    pub id: String,
    pub mode: RewardMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compiled: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_placeholder: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_structure: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_identifier: Option<f64>,
    pub diagnostics: Vec<String>,
}

impl RewardRecord {
    fn empty(id: &str, mode: RewardMode) -> Self {
        Self {
            id: id.to_string(),
            mode,
            compiled: None,
            r_placeholder: None,
            r_structure: None,
            r_identifier: None,
            diagnostics: Vec::new(),
        }
    }

    /// Whether every present reward lies in its admissible range.
    pub fn in_range(&self) -> bool {
        let p = self.r_placeholder.is_none_or(|v| (0.0..=1.0).contains(&v));
        let s = self.r_structure.is_none_or(|v| v == 0.0 || (1.0..=2.0).contains(&v));
        let i = self.r_identifier.is_none_or(|v| (-1.0..=1.0).contains(&v));
        p && s && i
    }
}

pub struct BatchConfig<'a> {
    pub compiler: CompilerConfig,
    pub provider: &'a dyn EmbeddingProvider,
}

fn score_pair(pair: &RewardPair, mode: RewardMode, config: &BatchConfig<'_>) -> Result<RewardRecord, RewardError> {
    let mut rec = RewardRecord::empty(&pair.id, mode);
    match mode {
        RewardMode::Structure => {
            let r = structure_reward(
                &pair.generated,
                &pair.reference,
                pair.reference_header.as_deref(),
                &config.compiler,
            )?;
            rec.compiled = Some(r.verdict.compiled);
            rec.r_placeholder = Some(r.r_placeholder);
            rec.r_structure = Some(r.r_structure);
            rec.diagnostics.extend(r.verdict.diagnostic);
        }
        RewardMode::Identifier => match identifier_reward(&pair.generated, &pair.reference, config.provider) {
            Ok(r) => rec.r_identifier = Some(r.r_identifier),
            Err(RewardError::EmptyText) => rec.diagnostics.push(RewardError::EmptyText.to_string()),
            Err(e) => return Err(e),
        },
    }
    Ok(rec)
}

/// Score pairs in parallel, preserving input order.
///
/// Per-pair failures (timeouts, I/O trouble in one scratch directory) end up
/// in that record's diagnostics. A missing toolchain or unreachable embedding
/// provider aborts the batch.
pub fn batch_rewards(
    pairs: &[RewardPair],
    mode: RewardMode,
    config: &BatchConfig<'_>,
) -> Result<Vec<RewardRecord>, RewardError> {
    if mode == RewardMode::Structure && !pairs.is_empty() {
        config.compiler.ensure_available()?;
    }
    let results: Vec<Result<RewardRecord, RewardError>> =
        pairs.par_iter().map(|p| score_pair(p, mode, config)).collect();
    let mut out = Vec::with_capacity(results.len());
    for (pair, res) in pairs.iter().zip(results) {
        match res {
            Ok(rec) => out.push(rec),
            Err(e) if e.is_fatal() => return Err(e),
            Err(e) => {
                let mut rec = RewardRecord::empty(&pair.id, mode);
                if mode == RewardMode::Structure {
                    rec.compiled = Some(false);
                    rec.r_structure = Some(0.0);
                }
                rec.diagnostics.push(e.to_string());
                out.push(rec);
            }
        }
    }
    Ok(out)
}
