//! Evaluation protocols: re-executability against unit-test harnesses, a
//! structural readability score and judge-based identifier ratings.

mod judge;
mod r2i;
mod reexec;
mod restore;

pub use judge::{
    judge_identifier_quality, parse_rating, render_prompt, ConcurrencyCap, HttpJudgeClient, JudgeClient,
    JudgeScore, JUDGE_KEY_ENV, JUDGE_MODEL_ENV, JUDGE_URL_ENV, PROMPT_ID as JUDGE_PROMPT_ID,
};
pub use r2i::{feature_counts, is_opaque_name, mean_r2i, r2i_score, FeatureSpec, Polarity, R2IScore, R2iWeights};
pub use reexec::{
    reexecutability_rate, rates_by_level, reexecute, LevelRates, PassCount, ReexecResult, Stage, TestCaseSuite,
};
pub use restore::{restore_function_name, target_name_spans};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("expected exactly one top-level function definition, found {definitions}")]
    AmbiguousTarget { definitions: usize },
    #[error("no samples to aggregate")]
    EmptyInput,
    #[error("{0}")]
    ToolchainMissing(String),
    #[error("judge unavailable: {0}")]
    JudgeUnavailable(String),
    #[error("judge reply had no parseable rating after {attempts} attempts")]
    RatingUnparseable { attempts: usize },
    #[error("scores from different weight tables ({0} vs {1}) cannot be combined")]
    MixedWeights(String, String),
    #[error("invalid readability weight table: {0}")]
    Weights(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
