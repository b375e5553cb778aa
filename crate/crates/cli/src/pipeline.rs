//! `pipeline run` and `evaluate`: backend wiring and artifact output.

use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use decompkit::metrics::JudgeClient;
use decompkit::orchestrator::{
    load_benchmark, report_render, run_benchmark, run_two_phase, validate_benchmark, Benchmark,
    DeobfuscationOracleBackend, EchoBackend, GroundTruthIrBackend, HttpBackend, MetricsConfig, ModelBackend,
    OrchestratorError, PipelineRun, Preset, RecordedBackend, Request, RunConfig, RunTimings,
};
use serde::Serialize;

use crate::config::{AppConfig, BackendSpec, PipelineSection, PHASE1_URL_ENV, PHASE2_URL_ENV};

/// Answers each benchmark pseudocode with its reference source.
struct ReferenceBackend {
    by_pseudo: HashMap<String, String>,
}

impl ModelBackend for ReferenceBackend {
    fn generate(&self, request: &Request<'_>) -> Result<String, OrchestratorError> {
        self.by_pseudo
            .get(request.input)
            .cloned()
            .ok_or_else(|| OrchestratorError::Generation("no reference for this pseudocode".into()))
    }

    fn backend_id(&self) -> String {
        "reference".into()
    }
}

fn load_bench(dir: &Path, validate: bool, cfg: &AppConfig) -> Result<Benchmark> {
    let bench = load_benchmark(dir).with_context(|| format!("loading benchmark {}", dir.display()))?;
    let bench = if validate { validate_benchmark(bench, &cfg.compiler())? } else { bench };
    for e in &bench.excluded {
        log::warn!("excluded {}: {}", e.id, e.reason);
    }
    if bench.samples.is_empty() {
        bail!("benchmark {} has no usable samples", dir.display());
    }
    Ok(bench)
}

fn build_backend(spec: &BackendSpec, phase: u8, bench: &Benchmark) -> Result<Box<dyn ModelBackend>> {
    Ok(match spec {
        BackendSpec::Echo => Box::new(EchoBackend),
        BackendSpec::OracleIr => {
            let mut b = GroundTruthIrBackend::default();
            for s in &bench.samples {
                b.insert(&s.pseudo, &s.source)?;
            }
            Box::new(b)
        }
        BackendSpec::OracleDeobfuscate => {
            // Rename maps come from the same obfuscation the IR oracle performs.
            let mut ir = GroundTruthIrBackend::default();
            let mut b = DeobfuscationOracleBackend::default();
            for s in &bench.samples {
                b.insert(ir.insert(&s.pseudo, &s.source)?);
            }
            Box::new(b)
        }
        BackendSpec::Recorded { path } => Box::new(RecordedBackend::load(path)?),
        BackendSpec::Http { url, timeout_ms, max_in_flight } => {
            let env = if phase == 1 { PHASE1_URL_ENV } else { PHASE2_URL_ENV };
            let url = std::env::var(env)
                .ok()
                .or_else(|| url.clone())
                .with_context(|| format!("phase {phase} http backend needs `url` or {env}"))?;
            Box::new(HttpBackend::new(url, Duration::from_millis(*timeout_ms), *max_in_flight))
        }
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn evaluate_and_write(cfg: &AppConfig, bench: &Benchmark, run: &PipelineRun, out: &Path) -> Result<()> {
    let judge = cfg.judge()?;
    let mut mcfg = MetricsConfig::new(cfg.compiler());
    if let Some((client, attempts)) = &judge {
        mcfg.judge = Some(client as &dyn JudgeClient);
        mcfg.judge_attempts = *attempts;
    }
    let report = run_benchmark(bench, run, &mcfg)?;
    let rendered = report_render(&report);
    std::fs::write(out.join("report.json"), &rendered.json)?;
    std::fs::write(out.join("report.txt"), &rendered.table)?;
    print!("{}", rendered.table);
    Ok(())
}

pub fn run(cfg: &AppConfig, section: &PipelineSection) -> Result<()> {
    let bench = load_bench(&section.bench_dir, section.validate, cfg)?;
    let phase1 = build_backend(&section.phase1, 1, &bench)?;
    let phase2 = section.phase2.as_ref().map(|s| build_backend(s, 2, &bench)).transpose()?;
    if section.preset.has_naming_phase() && phase2.is_none() {
        bail!("preset {} needs a phase2 backend", section.preset);
    }
    let mut run_cfg = RunConfig::for_preset(section.preset);
    run_cfg.params = section.params.clone();
    run_cfg.workers = section.workers;

    let (run, timings): (PipelineRun, RunTimings) =
        run_two_phase(&bench.pipeline_inputs(), phase1.as_ref(), phase2.as_deref(), &run_cfg)?;
    std::fs::create_dir_all(&section.out_dir)
        .with_context(|| format!("creating {}", section.out_dir.display()))?;
    write_json(&section.out_dir.join("run.json"), &run)?;
    write_json(&section.out_dir.join("timings.json"), &timings)?;
    evaluate_and_write(cfg, &bench, &run, &section.out_dir)
}

pub fn evaluate(
    cfg: &AppConfig,
    bench_dir: &Path,
    run_file: Option<&Path>,
    references: bool,
    out: &Path,
    validate: bool,
) -> Result<()> {
    let bench = load_bench(bench_dir, validate, cfg)?;
    let run: PipelineRun = if references {
        let backend = ReferenceBackend {
            by_pseudo: bench.samples.iter().map(|s| (s.pseudo.clone(), s.source.clone())).collect(),
        };
        run_two_phase(&bench.pipeline_inputs(), &backend, None, &RunConfig::for_preset(Preset::PseudoSrc))?.0
    } else {
        let path = run_file.context("either --run or --references is required")?;
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).context("run file does not match the run schema")?
    };
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    evaluate_and_write(cfg, &bench, &run, out)
}
