//! Two-phase generation: pseudocode to IR, then IR to named source.

use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::backend::{GenerationParams, ModelBackend, Request};
use super::prompt::PromptTemplate;
use super::OrchestratorError;
use crate::digest::sha256_parts;

/// Named configurations of the decompilation chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// One model from pseudocode straight to source.
    #[serde(rename = "pseudo-src")]
    PseudoSrc,
    /// Structure recovery only; the IR itself is evaluated.
    #[serde(rename = "pseudo-ir")]
    PseudoIr,
    #[serde(rename = "pseudo-ir-rl")]
    PseudoIrRl,
    /// Full two-phase chain.
    #[serde(rename = "pseudo-ir-src")]
    PseudoIrSrc,
    #[serde(rename = "pseudo-ir-src-rl")]
    PseudoIrSrcRl,
}

impl Preset {
    pub const ALL: [Preset; 5] =
        [Preset::PseudoSrc, Preset::PseudoIr, Preset::PseudoIrRl, Preset::PseudoIrSrc, Preset::PseudoIrSrcRl];

    pub fn name(self) -> &'static str {
        match self {
            Preset::PseudoSrc => "pseudo-src",
            Preset::PseudoIr => "pseudo-ir",
            Preset::PseudoIrRl => "pseudo-ir-rl",
            Preset::PseudoIrSrc => "pseudo-ir-src",
            Preset::PseudoIrSrcRl => "pseudo-ir-src-rl",
        }
    }

    /// Whether the chain has a naming phase after structure recovery.
    pub fn has_naming_phase(self) -> bool {
        matches!(self, Preset::PseudoIrSrc | Preset::PseudoIrSrcRl)
    }

    /// Whether the first phase produces placeholder IR.
    pub fn produces_ir(self) -> bool {
        !matches!(self, Preset::PseudoSrc)
    }

    pub fn templates(self) -> (PromptTemplate, Option<PromptTemplate>) {
        match self {
            Preset::PseudoSrc => (PromptTemplate::direct(), None),
            Preset::PseudoIr | Preset::PseudoIrRl => (PromptTemplate::structure(), None),
            Preset::PseudoIrSrc | Preset::PseudoIrSrcRl => {
                (PromptTemplate::structure(), Some(PromptTemplate::naming()))
            }
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| format!("unknown preset {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineSample {
    pub id: String,
    pub pseudo: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub preset: Preset,
    pub params: GenerationParams,
    pub phase1_template: PromptTemplate,
    pub phase2_template: Option<PromptTemplate>,
    /// Worker threads; 0 means rayon's default.
    pub workers: usize,
}

impl RunConfig {
    pub fn for_preset(preset: Preset) -> Self {
        let (phase1_template, phase2_template) = preset.templates();
        Self { preset, params: GenerationParams::default(), phase1_template, phase2_template, workers: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleOutput {
    pub id: String,
    /// Phase 1 text (IR, or source for the direct preset).
    pub ir_text: Option<String>,
    /// Final source: phase 2 output, or phase 1 output for the direct preset.
    pub src_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SampleOutput {
    /// Text handed to evaluation for this preset.
    pub fn evaluated_text(&self, preset: Preset) -> Option<&str> {
        if preset.has_naming_phase() || !preset.produces_ir() {
            self.src_text.as_deref()
        } else {
            self.ir_text.as_deref()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateEcho {
    pub id: String,
    pub sha256: String,
    pub text: String,
}

impl From<&PromptTemplate> for TemplateEcho {
    fn from(t: &PromptTemplate) -> Self {
        Self { id: t.id.clone(), sha256: t.digest(), text: t.text.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRun {
    pub run_id: String,
    pub preset: Preset,
    pub phase1_backend: String,
    pub phase2_backend: Option<String>,
    pub params: GenerationParams,
    pub phase1_template: TemplateEcho,
    pub phase2_template: Option<TemplateEcho>,
    pub inputs: Vec<String>,
    pub outputs: Vec<SampleOutput>,
}

/// Wall-clock timings, kept apart from the run so that runs stay
/// reproducible byte for byte.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTimings {
    pub total_ms: u64,
    pub per_sample_ms: Vec<(String, u64)>,
}

fn run_sample(
    sample: &PipelineSample,
    phase1: &dyn ModelBackend,
    phase2: Option<&dyn ModelBackend>,
    config: &RunConfig,
) -> Result<SampleOutput, OrchestratorError> {
    let mut out = SampleOutput { id: sample.id.clone(), ir_text: None, src_text: None, error: None };
    let prompt = config.phase1_template.render(&sample.pseudo);
    let first = match phase1.generate(&Request { prompt: &prompt, input: &sample.pseudo, params: &config.params }) {
        Ok(t) => t,
        Err(e) if e.is_fatal() => return Err(e),
        Err(e) => {
            out.error = Some(format!("phase 1: {e}"));
            return Ok(out);
        }
    };
    if !config.preset.produces_ir() {
        out.src_text = Some(first);
        return Ok(out);
    }
    out.ir_text = Some(first);
    let (Some(phase2), Some(template)) = (phase2, config.phase2_template.as_ref()) else {
        return Ok(out);
    };
    // Phase 2 sees only the phase 1 output.
    let ir = out.ir_text.as_deref().expect("set above");
    let prompt = template.render(ir);
    match phase2.generate(&Request { prompt: &prompt, input: ir, params: &config.params }) {
        Ok(t) => out.src_text = Some(t),
        Err(e) if e.is_fatal() => return Err(e),
        Err(e) => out.error = Some(format!("phase 2: {e}")),
    }
    Ok(out)
}

/// Run every sample through the configured chain. Per-sample generation
/// failures are recorded on the sample; an unreachable backend aborts.
pub fn run_two_phase(
    samples: &[PipelineSample],
    phase1: &dyn ModelBackend,
    phase2: Option<&dyn ModelBackend>,
    config: &RunConfig,
) -> Result<(PipelineRun, RunTimings), OrchestratorError> {
    if config.preset.has_naming_phase() && (phase2.is_none() || config.phase2_template.is_none()) {
        return Err(OrchestratorError::Config(format!("preset {} needs a phase 2 backend", config.preset)));
    }
    let phase2 = if config.preset.has_naming_phase() { phase2 } else { None };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| OrchestratorError::Config(e.to_string()))?;
    let start = Instant::now();
    let results: Vec<(Result<SampleOutput, OrchestratorError>, u64)> = pool.install(|| {
        samples
            .par_iter()
            .map(|s| {
                let t = Instant::now();
                let r = run_sample(s, phase1, phase2, config);
                (r, t.elapsed().as_millis() as u64)
            })
            .collect()
    });
    let mut outputs = Vec::with_capacity(results.len());
    let mut timings = RunTimings::default();
    for (sample, (res, ms)) in samples.iter().zip(results) {
        outputs.push(res?);
        timings.per_sample_ms.push((sample.id.clone(), ms));
    }
    timings.total_ms = start.elapsed().as_millis() as u64;

    let inputs: Vec<String> = samples.iter().map(|s| s.id.clone()).collect();
    let phase1_backend = phase1.backend_id();
    let phase2_backend = phase2.map(|b| b.backend_id());
    let run_id = sha256_parts(
        [
            config.preset.name().to_string(),
            phase1_backend.clone(),
            phase2_backend.clone().unwrap_or_default(),
            config.phase1_template.digest(),
            config.phase2_template.as_ref().map(|t| t.digest()).unwrap_or_default(),
            serde_json::to_string(&config.params).expect("params serialize"),
        ]
        .into_iter()
        .chain(inputs.iter().cloned()),
    )[..16]
        .to_string();
    let run = PipelineRun {
        run_id,
        preset: config.preset,
        phase1_backend,
        phase2_backend,
        params: config.params.clone(),
        phase1_template: (&config.phase1_template).into(),
        phase2_template: phase2.and(config.phase2_template.as_ref()).map(Into::into),
        inputs,
        outputs,
    };
    Ok((run, timings))
}
