//! Benchmark directories and metric aggregation.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::run::{PipelineRun, PipelineSample, Preset};
use super::OrchestratorError;
use crate::metrics::{
    judge_identifier_quality, r2i_score, reexecute, JudgeClient, MetricsError, R2iWeights, Stage, TestCaseSuite,
    JUDGE_PROMPT_ID,
};
use crate::reward::CompilerConfig;
use crate::OptLevel;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub opt_level: OptLevel,
    pub original_name: String,
    #[serde(default = "yes")]
    pub stripped: bool,
    #[serde(default)]
    pub expected_exit: i32,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
}

fn yes() -> bool {
    true
}

fn default_timeout() -> u64 {
    5_000
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchSample {
    pub id: String,
    pub source: String,
    pub pseudo: String,
    pub suite: TestCaseSuite,
    pub meta: SampleMeta,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Benchmark {
    pub samples: Vec<BenchSample>,
    /// Samples rejected at load or validation time.
    pub excluded: Vec<Exclusion>,
}

impl Benchmark {
    pub fn pipeline_inputs(&self) -> Vec<PipelineSample> {
        self.samples.iter().map(|s| PipelineSample { id: s.id.clone(), pseudo: s.pseudo.clone() }).collect()
    }
}

fn load_sample(dir: &Path, id: &str) -> Result<BenchSample, String> {
    let read = |name: &str| std::fs::read_to_string(dir.join(name)).map_err(|e| format!("{name}: {e}"));
    let meta: SampleMeta = serde_json::from_str(&read("meta.json")?).map_err(|e| format!("meta.json: {e}"))?;
    Ok(BenchSample {
        id: id.to_string(),
        source: read("source.c")?,
        pseudo: read("pseudo.txt")?,
        suite: TestCaseSuite {
            harness_source: read("harness.c")?,
            expected_exit: meta.expected_exit,
            timeout_ms: meta.timeout_ms,
        },
        meta,
    })
}

/// Read every sample subdirectory of `dir`, in name order. Incomplete
/// samples are excluded with a reason.
pub fn load_benchmark(dir: &Path) -> Result<Benchmark, OrchestratorError> {
    if !dir.is_dir() {
        return Err(OrchestratorError::Config(format!("benchmark {} is not a directory", dir.display())));
    }
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.filter_map(|e| e.ok()).map(|e| e.path()).collect();
    entries.sort();
    let mut bench = Benchmark::default();
    for path in entries.into_iter().filter(|p| p.is_dir()) {
        let id = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        match load_sample(&path, &id) {
            Ok(s) => bench.samples.push(s),
            Err(reason) => bench.excluded.push(Exclusion { id, reason }),
        }
    }
    Ok(bench)
}

/// Keep only samples whose harness passes against the reference source.
pub fn validate_benchmark(mut bench: Benchmark, compiler: &CompilerConfig) -> Result<Benchmark, OrchestratorError> {
    let verdicts: Vec<Result<crate::metrics::ReexecResult, MetricsError>> = bench
        .samples
        .par_iter()
        .map(|s| reexecute(&s.source, &s.suite, &s.meta.original_name, compiler))
        .collect();
    let mut kept = Vec::new();
    for (s, v) in bench.samples.into_iter().zip(verdicts) {
        let v = v?;
        if v.passed {
            kept.push(s);
        } else {
            let detail = v.diagnostic.map(|d| format!(": {d}")).unwrap_or_default();
            bench.excluded.push(Exclusion {
                id: s.id,
                reason: format!("reference fails its harness at stage {:?}{detail}", v.stage_failed),
            });
        }
    }
    bench.samples = kept;
    bench.excluded.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(bench)
}

pub struct MetricsConfig<'a> {
    pub compiler: CompilerConfig,
    pub weights: R2iWeights,
    pub judge: Option<&'a dyn JudgeClient>,
    pub judge_attempts: usize,
}

impl MetricsConfig<'_> {
    pub fn new(compiler: CompilerConfig) -> Self {
        Self { compiler, weights: R2iWeights::bundled().clone(), judge: None, judge_attempts: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEval {
    pub id: String,
    pub opt_level: OptLevel,
    pub passed: bool,
    pub stage_failed: Stage,
    pub r2i: f64,
    pub r2i_parse_ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judge_rating: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelMetrics {
    pub samples: usize,
    pub passed: usize,
    pub reexec_rate: f64,
    /// Mean readability; parse failures count as 0.
    pub r2i_mean: f64,
    pub r2i_parse_failures: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judge_mean: Option<f64>,
    pub judge_rated: usize,
    pub judge_missing: usize,
}

impl LevelMetrics {
    fn from_evals<'a>(evals: impl Iterator<Item = &'a SampleEval>, judged: bool) -> Self {
        let mut m = LevelMetrics::default();
        let (mut r2i_sum, mut judge_sum) = (0.0, 0u64);
        for e in evals {
            m.samples += 1;
            m.passed += e.passed as usize;
            r2i_sum += e.r2i;
            m.r2i_parse_failures += !e.r2i_parse_ok as usize;
            match e.judge_rating {
                Some(r) => {
                    m.judge_rated += 1;
                    judge_sum += r as u64;
                }
                None if judged => m.judge_missing += 1,
                None => {}
            }
        }
        if m.samples > 0 {
            m.reexec_rate = m.passed as f64 / m.samples as f64;
            m.r2i_mean = r2i_sum / m.samples as f64;
        }
        if m.judge_rated > 0 {
            m.judge_mean = Some(judge_sum as f64 / m.judge_rated as f64);
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub run_id: String,
    pub preset: Preset,
    pub phase1_backend: String,
    pub phase2_backend: Option<String>,
    pub compiler_id: String,
    pub compiler_flags: Vec<String>,
    pub r2i_weights_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judge_model_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judge_prompt_id: Option<String>,
    /// How generated code is linked to the harness.
    pub name_restoration: String,
    pub per_level: BTreeMap<OptLevel, LevelMetrics>,
    pub overall: LevelMetrics,
    pub samples: Vec<SampleEval>,
    pub excluded: Vec<Exclusion>,
}

pub const NAME_RESTORATION_POLICY: &str =
    "target function declarator, matching prototypes and direct self-calls renamed to the original name; callee names left as generated";

fn evaluate_sample(
    sample: &BenchSample,
    text: Option<&str>,
    note: Option<String>,
    config: &MetricsConfig<'_>,
) -> Result<SampleEval, OrchestratorError> {
    let Some(text) = text else {
        return Ok(SampleEval {
            id: sample.id.clone(),
            opt_level: sample.meta.opt_level,
            passed: false,
            stage_failed: Stage::Compile,
            r2i: 0.0,
            r2i_parse_ok: false,
            judge_rating: None,
            note: note.or_else(|| Some("no output".into())),
        });
    };
    let rx = reexecute(text, &sample.suite, &sample.meta.original_name, &config.compiler)?;
    let r2i = r2i_score(text, &config.weights);
    let mut note = note;
    let judge_rating = match config.judge {
        None => None,
        Some(client) => match judge_identifier_quality(text, &sample.source, client, config.judge_attempts) {
            Ok(s) => Some(s.rating),
            Err(e @ MetricsError::JudgeUnavailable(_)) => return Err(e.into()),
            Err(e) => {
                note = Some(e.to_string());
                None
            }
        },
    };
    Ok(SampleEval {
        id: sample.id.clone(),
        opt_level: sample.meta.opt_level,
        passed: rx.passed,
        stage_failed: rx.stage_failed,
        r2i: r2i.value,
        r2i_parse_ok: r2i.parse_ok,
        judge_rating,
        note,
    })
}

/// Score a run's outputs against a validated benchmark.
pub fn run_benchmark(
    bench: &Benchmark,
    run: &PipelineRun,
    config: &MetricsConfig<'_>,
) -> Result<EvalReport, OrchestratorError> {
    if bench.samples.is_empty() {
        return Err(OrchestratorError::EmptyInput);
    }
    let outputs: BTreeMap<&str, &super::run::SampleOutput> = run.outputs.iter().map(|o| (o.id.as_str(), o)).collect();
    let evals: Vec<Result<SampleEval, OrchestratorError>> = bench
        .samples
        .par_iter()
        .map(|s| {
            let out = outputs.get(s.id.as_str());
            let text = out.and_then(|o| o.evaluated_text(run.preset));
            let note = out.and_then(|o| o.error.clone());
            evaluate_sample(s, text, note, config)
        })
        .collect();
    let samples = evals.into_iter().collect::<Result<Vec<_>, _>>()?;

    let judged = config.judge.is_some();
    let mut per_level = BTreeMap::new();
    for level in OptLevel::ALL {
        let m = LevelMetrics::from_evals(samples.iter().filter(|e| e.opt_level == level), judged);
        if m.samples > 0 {
            per_level.insert(level, m);
        }
    }
    let overall = LevelMetrics::from_evals(samples.iter(), judged);
    Ok(EvalReport {
        run_id: run.run_id.clone(),
        preset: run.preset,
        phase1_backend: run.phase1_backend.clone(),
        phase2_backend: run.phase2_backend.clone(),
        compiler_id: config.compiler.compiler_id(),
        compiler_flags: config.compiler.flags.clone(),
        r2i_weights_id: config.weights.id.clone(),
        judge_model_id: config.judge.map(|j| j.model_id()),
        judge_prompt_id: config.judge.map(|_| JUDGE_PROMPT_ID.to_string()),
        name_restoration: NAME_RESTORATION_POLICY.to_string(),
        per_level,
        overall,
        samples,
        excluded: bench.excluded.clone(),
    })
}
