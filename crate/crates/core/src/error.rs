use std::path::PathBuf;

use thiserror::Error;

use crate::{corpus, eval, gat, lingfeat, promptgen, retriever, workflow};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Top-level error. Each variant maps onto one of the CLI exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Conllu(#[from] corpus::ConlluError),
    #[error(transparent)]
    Record(#[from] corpus::RecordError),
    #[error(transparent)]
    Feature(#[from] lingfeat::FeatureError),
    #[error(transparent)]
    Encoder(#[from] gat::EncoderError),
    #[error(transparent)]
    Index(#[from] retriever::IndexError),
    #[error(transparent)]
    Prompt(#[from] promptgen::PromptError),
    #[error(transparent)]
    Client(#[from] promptgen::ClientError),
    #[error(transparent)]
    Pipeline(#[from] promptgen::PipelineError),
    #[error(transparent)]
    Eval(#[from] eval::EvalError),
    #[error(transparent)]
    Config(#[from] workflow::ConfigError),
    #[error("{stage}: missing upstream artifact {}; run stage {requires} first", path.display())]
    MissingArtifact {
        stage: &'static str,
        requires: &'static str,
        path: PathBuf,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Data(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// 1: usage/config, 2: data, 3: external client.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::MissingArtifact { .. } => 1,
            Error::Client(_) => 3,
            Error::Pipeline(e) if e.is_client_failure() => 3,
            _ => 2,
        }
    }
}
