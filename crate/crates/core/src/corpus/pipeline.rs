//! End-to-end corpus build driven by a TOML configuration.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    compile_and_strip, dedup, ingest_pseudocode, normalize_with, sample_id, BinaryArtifact, CorpusError,
    CorpusSample, DedupOutcome, DedupParams, FormatterHook, PseudoProvider, StripConfig, Toolchain,
};
use crate::ir::{extract_reserved, obfuscate};
use crate::lexer;
use crate::OptLevel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DedupField {
    Source,
    Pseudo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DedupConfig {
    pub enabled: bool,
    pub on: DedupField,
    pub shingle_k: usize,
    pub bands: usize,
    pub rows: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for DedupConfig {
    fn default() -> Self {
        let p = DedupParams::default();
        Self {
            enabled: true,
            on: DedupField::Source,
            shingle_k: p.shingle_k,
            bands: p.bands,
            rows: p.rows,
            threshold: p.threshold,
            seed: p.seed,
        }
    }
}

impl DedupConfig {
    pub fn params(&self) -> DedupParams {
        DedupParams {
            shingle_k: self.shingle_k,
            bands: self.bands,
            rows: self.rows,
            threshold: self.threshold,
            seed: self.seed,
        }
    }
}

fn default_compilers() -> Vec<Toolchain> {
    vec![Toolchain::new("gcc"), Toolchain::new("clang")]
}

fn default_levels() -> Vec<OptLevel> {
    OptLevel::ALL.to_vec()
}

fn default_shard_size() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    /// Directory of `*.c` files, one function per file.
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default = "default_compilers")]
    pub compilers: Vec<Toolchain>,
    #[serde(default = "default_levels")]
    pub levels: Vec<OptLevel>,
    #[serde(default)]
    pub strip: StripConfig,
    pub pseudo: PseudoProvider,
    #[serde(default)]
    pub dedup: DedupConfig,
    #[serde(default = "default_shard_size")]
    pub shard_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formatter: Option<FormatterHook>,
}

impl CorpusConfig {
    /// Resolve relative paths against `base`.
    pub fn rebase(mut self, base: &Path) -> Self {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.input_dir);
        fix(&mut self.output_dir);
        if let PseudoProvider::Offline { dir } = &mut self.pseudo {
            fix(dir);
        }
        self
    }
}

/// Read a TOML config; relative paths are taken relative to its directory.
pub fn load_config(path: &Path) -> Result<CorpusConfig, CorpusError> {
    let text = std::fs::read_to_string(path)?;
    let cfg: CorpusConfig = toml::from_str(&text).map_err(|e| CorpusError::Config(e.to_string()))?;
    Ok(cfg.rebase(path.parent().unwrap_or(Path::new("."))))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub input_files: usize,
    pub compile_cells: usize,
    pub compiled: usize,
    pub compile_failed: usize,
    pub paired: usize,
    pub unpaired: usize,
    pub obfuscated: usize,
    pub obfuscate_failed: usize,
    pub duplicate_ids: usize,
    pub dedup_units: usize,
    pub dedup_exempt: usize,
    pub deduped: usize,
    pub emitted: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCounts {
    pub pseudo: usize,
    pub ir: usize,
    pub source: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardInfo {
    pub file: String,
    pub samples: usize,
    pub tokens: TokenCounts,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropRecord {
    pub stage: String,
    pub subject: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub counts: StageCounts,
    pub shards: Vec<ShardInfo>,
    pub tokens: TokenCounts,
    pub dedup_on: DedupField,
    pub dedup_params: DedupParams,
    pub compilers: Vec<String>,
    pub levels: Vec<OptLevel>,
    pub stripped: bool,
    pub dropped: Vec<DropRecord>,
    pub dedup_report: DedupOutcome,
}

fn drop_record(stage: &str, subject: impl Into<String>, reason: impl Into<String>) -> DropRecord {
    DropRecord { stage: stage.into(), subject: subject.into(), reason: reason.into() }
}

fn token_count(text: &str) -> usize {
    lexer::code_tokens(text).count()
}

fn list_sources(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    if !dir.is_dir() {
        return Err(CorpusError::Config(format!("input_dir {} is not a directory", dir.display())));
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "c"))
        .collect();
    files.sort();
    Ok(files)
}

struct Unit {
    stem: String,
    source: String,
    artifacts: Vec<BinaryArtifact>,
}

/// Run normalize, compile and strip, pseudocode pairing, IR generation and
/// dedup; write JSONL shards and `manifest.json` into the output directory.
pub fn build_corpus(config: &CorpusConfig) -> Result<CorpusManifest, CorpusError> {
    if config.shard_size == 0 {
        return Err(CorpusError::Config("shard_size must be positive".into()));
    }
    let params = config.dedup.params();
    if params.bands == 0 || params.rows == 0 || params.shingle_k == 0 {
        return Err(CorpusError::Config("dedup shingle_k, bands and rows must be positive".into()));
    }
    let files = list_sources(&config.input_dir)?;
    let out_dir = &config.output_dir;
    let norm_dir = out_dir.join("normalized");
    let obj_dir = out_dir.join("objects");
    std::fs::create_dir_all(&norm_dir)?;
    std::fs::create_dir_all(&obj_dir)?;
    if !files.is_empty() {
        config.pseudo.check()?;
    }

    let mut counts = StageCounts { input_files: files.len(), ..Default::default() };
    let mut dropped = Vec::new();

    // Normalize and compile, in parallel per source file.
    let units: Vec<Result<(Unit, Vec<super::CellFailure>), String>> = files
        .par_iter()
        .map(|path| {
            let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let raw = std::fs::read_to_string(path).map_err(|e| format!("{stem}: {e}"))?;
            let source = normalize_with(&raw, config.formatter.as_ref());
            let norm_path = norm_dir.join(format!("{stem}.c"));
            std::fs::write(&norm_path, format!("{source}\n")).map_err(|e| format!("{stem}: {e}"))?;
            let outcome = compile_and_strip(&norm_path, &config.levels, &config.compilers, &obj_dir, &config.strip)
                .map_err(|e| format!("{stem}: {e}"))?;
            Ok((Unit { stem, source, artifacts: outcome.artifacts }, outcome.failures))
        })
        .collect();

    let mut kept_units = Vec::new();
    for u in units {
        counts.compile_cells += config.levels.len() * config.compilers.len();
        match u {
            Ok((unit, failures)) => {
                counts.compiled += unit.artifacts.len();
                counts.compile_failed += failures.len();
                for f in failures {
                    dropped.push(drop_record(
                        "compile",
                        format!("{}.c [{} {}]", f.source_stem, f.compiler_id, f.opt_level),
                        f.reason,
                    ));
                }
                kept_units.push(unit);
            }
            Err(reason) => {
                counts.compile_failed += config.levels.len() * config.compilers.len();
                dropped.push(drop_record("read", reason.clone(), reason));
            }
        }
    }

    // Pair with pseudocode and generate IR.
    let mut samples: Vec<(String, CorpusSample)> = Vec::new();
    let mut seen_ids = HashSet::new();
    for unit in &kept_units {
        let ingest = ingest_pseudocode(&unit.artifacts, &config.pseudo)?;
        counts.paired += ingest.paired.len();
        counts.unpaired += ingest.unpaired.len();
        for u in ingest.unpaired {
            dropped.push(drop_record("pseudo", format!("{}.c {}", unit.stem, u.digest), u.reason));
        }
        for (artifact, raw_pseudo) in ingest.paired {
            let subject = format!("{}.c [{} {}]", unit.stem, artifact.compiler_id, artifact.opt_level);
            let pseudo = normalize_with(&raw_pseudo, config.formatter.as_ref());
            let ir = match obfuscate(&unit.source, &extract_reserved(&pseudo)) {
                Ok(ir) => ir,
                Err(e) => {
                    counts.obfuscate_failed += 1;
                    dropped.push(drop_record("obfuscate", subject, e.to_string()));
                    continue;
                }
            };
            counts.obfuscated += 1;
            let id = sample_id(&unit.source, artifact.opt_level, &artifact.compiler_id);
            if !seen_ids.insert(id.clone()) {
                counts.duplicate_ids += 1;
                dropped.push(drop_record("dedup", subject, "identical source already emitted"));
                continue;
            }
            let provenance = format!("{}.c|{}|{}|{}", unit.stem, artifact.compiler_id, artifact.opt_level, artifact.digest);
            samples.push((
                unit.stem.clone(),
                CorpusSample {
                    id,
                    source: unit.source.clone(),
                    pseudo,
                    ir: ir.ir_text,
                    opt_level: artifact.opt_level,
                    compiler_id: artifact.compiler_id.clone(),
                    stripped: artifact.stripped,
                    provenance,
                },
            ));
        }
    }

    // Near-duplicate removal.
    let (report, survivors) = if config.dedup.enabled {
        match config.dedup.on {
            DedupField::Source => {
                let stems: Vec<&str> = {
                    let mut v: Vec<&str> = samples.iter().map(|(s, _)| s.as_str()).collect();
                    v.dedup();
                    v
                };
                let texts: BTreeMap<&str, &str> =
                    samples.iter().map(|(s, c)| (s.as_str(), c.source.as_str())).collect();
                let items: Vec<(String, String)> =
                    stems.iter().map(|s| (s.to_string(), texts[s].to_string())).collect();
                let report = dedup(&items, &params)?;
                let keep: HashSet<&str> = report.kept.iter().map(String::as_str).collect();
                let survivors: Vec<CorpusSample> =
                    samples.iter().filter(|(s, _)| keep.contains(s.as_str())).map(|(_, c)| c.clone()).collect();
                counts.dedup_units = items.len();
                (report, survivors)
            }
            DedupField::Pseudo => {
                let items: Vec<(String, String)> =
                    samples.iter().map(|(_, c)| (c.id.clone(), c.pseudo.clone())).collect();
                let report = dedup(&items, &params)?;
                let keep: HashSet<&str> = report.kept.iter().map(String::as_str).collect();
                let survivors: Vec<CorpusSample> =
                    samples.iter().filter(|(_, c)| keep.contains(c.id.as_str())).map(|(_, c)| c.clone()).collect();
                counts.dedup_units = items.len();
                (report, survivors)
            }
        }
    } else {
        (DedupOutcome::default(), samples.iter().map(|(_, c)| c.clone()).collect())
    };
    counts.dedup_exempt = report.exempt.len();
    counts.deduped = samples.len() - survivors.len();
    counts.emitted = survivors.len();
    for d in &report.dropped {
        dropped.push(drop_record("dedup", d.id.clone(), format!("near-duplicate of {}", d.representative)));
    }

    // Shards.
    for entry in std::fs::read_dir(out_dir)? {
        let p = entry?.path();
        let name = p.file_name().unwrap_or_default().to_string_lossy();
        if name.starts_with("shard-") && name.ends_with(".jsonl") {
            std::fs::remove_file(&p)?;
        }
    }
    let mut shards = Vec::new();
    let mut total = TokenCounts::default();
    for (n, chunk) in survivors.chunks(config.shard_size).enumerate() {
        let file = format!("shard-{n:05}.jsonl");
        let mut w = std::io::BufWriter::new(std::fs::File::create(out_dir.join(&file))?);
        let mut tokens = TokenCounts::default();
        for s in chunk {
            serde_json::to_writer(&mut w, s).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
            tokens.pseudo += token_count(&s.pseudo);
            tokens.ir += token_count(&s.ir);
            tokens.source += token_count(&s.source);
        }
        w.flush()?;
        total.pseudo += tokens.pseudo;
        total.ir += tokens.ir;
        total.source += tokens.source;
        shards.push(ShardInfo { file, samples: chunk.len(), tokens });
    }

    let manifest = CorpusManifest {
        counts,
        shards,
        tokens: total,
        dedup_on: config.dedup.on,
        dedup_params: params,
        compilers: config.compilers.iter().map(|c| c.id.clone()).collect(),
        levels: config.levels.clone(),
        stripped: config.strip.enabled,
        dropped,
        dedup_report: report,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::from)?;
    std::fs::write(out_dir.join("manifest.json"), json + "\n")?;
    Ok(manifest)
}
