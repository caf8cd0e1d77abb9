//! Stage orchestration behind the `laida` binary: configuration loading,
//! atomic artifact writes, the manifest and the stage runner.

mod artifacts;
mod config;
mod stages;

use thiserror::Error;

pub use artifacts::{atomic_write, sha256_file, sha256_hex, ArtifactEntry, Manifest, MANIFEST_FILE};
pub use config::{
    ClientSection, EncoderSection, FeatureSection, LlmSection, PathSection, RetrievalSection, RunConfig, RunSection,
    ENV_PREFIX,
};
pub use stages::{load_token_embeddings, run_stage, Stage, StageOutcome};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Read { path: String, reason: String },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("environment override {var}: {reason}")]
    Env { var: String, reason: String },
    #[error("config value out of range: {0}")]
    Range(String),
    #[error("unknown stage {0:?}")]
    UnknownStage(String),
}
