//! Two-phase decompilation runs against pluggable model backends, and
//! benchmark evaluation of their outputs.

mod backend;
mod bench;
mod prompt;
mod report;
mod run;

pub use backend::{
    DeobfuscationOracleBackend, EchoBackend, GenerationParams, GroundTruthIrBackend, HttpBackend, ModelBackend,
    RecordedBackend, RecordedResponse, Request,
};
pub use bench::{
    load_benchmark, run_benchmark, validate_benchmark, BenchSample, Benchmark, EvalReport, Exclusion, LevelMetrics,
    MetricsConfig, SampleEval, SampleMeta, NAME_RESTORATION_POLICY,
};
pub use prompt::{PromptTemplate, INPUT_SLOT};
pub use report::{report_render, RenderedReport};
pub use run::{
    run_two_phase, PipelineRun, PipelineSample, Preset, RunConfig, RunTimings, SampleOutput, TemplateEcho,
};

use crate::metrics::MetricsError;

#[derive(Debug, thiserror::Error)]
pub enum OrchestratorError {
    #[error("model backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("oracle backend failed: {0}")]
    Oracle(String),
    #[error("benchmark is empty")]
    EmptyInput,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl OrchestratorError {
    /// Errors that abort a whole run.
    pub fn is_fatal(&self) -> bool {
        matches!(
            self,
            OrchestratorError::BackendUnavailable(_)
                | OrchestratorError::Config(_)
                | OrchestratorError::Io(_)
                | OrchestratorError::Metrics(MetricsError::ToolchainMissing(_) | MetricsError::JudgeUnavailable(_))
        )
    }
}
