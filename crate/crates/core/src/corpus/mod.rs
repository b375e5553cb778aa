//! Training-corpus preparation: normalization, multi-level compilation and
//! stripping, pseudocode pairing, IR generation and near-duplicate removal.

mod binary;
mod minhash;
mod normalize;
mod pipeline;
mod pseudo;

use serde::{Deserialize, Serialize};

pub use binary::{compile_and_strip, BinaryArtifact, CellFailure, CompileOutcome, StripConfig, Toolchain};
pub use minhash::{
    candidate_probability, dedup, minhash, minhash_with, s_curve_threshold, shingle_hashes, DedupOutcome,
    DedupParams, DroppedEntry, HashFamily, LshIndex, MergedPair, MinHashSignature,
};
pub use normalize::{
    canonicalize_whitespace, normalize_pseudo, normalize_source, normalize_with, strip_comments, FormatterHook,
};
pub use pipeline::{
    build_corpus, load_config, CorpusConfig, CorpusManifest, DedupConfig, DedupField, DropRecord, ShardInfo,
    StageCounts, TokenCounts,
};
pub use pseudo::{ingest_pseudocode, IngestOutcome, PseudoProvider, Unpaired};

use crate::digest::sha256_parts;
use crate::OptLevel;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("text has fewer than {k} tokens")]
    TextTooShort { k: usize },
    #[error("signatures differ in length, shingle size or seed")]
    SignatureMismatch,
    #[error("pseudocode provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("invalid corpus configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One (pseudocode, IR, source) training triple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSample {
    pub id: String,
    pub source: String,
    pub pseudo: String,
    pub ir: String,
    pub opt_level: OptLevel,
    pub compiler_id: String,
    pub stripped: bool,
    pub provenance: String,
}

/// Content id of a sample: hash of source text, level and compiler.
pub fn sample_id(source: &str, opt_level: OptLevel, compiler_id: &str) -> String {
    sha256_parts([source, opt_level.as_str(), compiler_id])
}
