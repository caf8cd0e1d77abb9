//! Prompt rendering, LLM-backed distractor generation and option assembly.
//!
//! Three template kinds are supported: distractor generation, simile
//! pre-training pairs and the few-shot task prompt. Templates are plain
//! UTF-8 text with `{name}` placeholders; the defaults live in `templates/`.

mod client;
mod pipeline;
mod prompts;
mod template;

use thiserror::Error;

pub use client::{HttpClient, LlmClient, LlmClientSpec, MockClient, SyntheticClient, ENDPOINT_ENV};
pub use pipeline::{
    item_seed, preprocess_pipeline, read_raw_items, FailureReport, ItemFailure, PipelineOptions, PipelineOutput, RawItem,
    RETRY_SUFFIX,
};
pub use prompts::{
    assemble_options, format_options, parse_distractor_response, render_distractor_prompt, render_pretrain_prompt,
    render_task_prompt, PretrainExample,
};
pub use template::{PromptTemplate, TemplateKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("{kind} template must contain {{{name}}} exactly once (found {count})")]
    Placeholder { kind: TemplateKind, name: String, count: usize },
    #[error("{kind} template does not take {{{name}}}")]
    UnexpectedPlaceholder { kind: TemplateKind, name: String },
    #[error("no value supplied for {{{0}}}")]
    MissingValue(String),
    #[error("expected a {expected} template, got {found}")]
    WrongKind { expected: TemplateKind, found: TemplateKind },
    #[error("unknown template kind {0:?}")]
    UnknownKind(String),
    #[error("response holds {found} parseable triplets, need 3")]
    TooFewTriplets { found: usize },
    #[error("response line {line} repeats the gold triplet")]
    EqualsGold { line: usize },
    #[error("duplicate option {0}")]
    DuplicateOption(String),
    #[error("example {0} is the query record itself")]
    SelfLeak(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("endpoint returned HTTP {0}")]
    Status(u16),
    #[error("unreadable response: {0}")]
    BadResponse(String),
    #[error("no transcript entry matches the prompt")]
    NoScript,
    #[error("transcript line {line}: {reason}")]
    Transcript { line: usize, reason: String },
    #[error("invalid client spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("item {id} failed: {reason}")]
    ItemFailed { id: String, reason: String, client: bool },
    #[error("raw item {0} has neither tenor nor vehicle")]
    InvalidGold(String),
    #[error("duplicate raw item id {0}")]
    DuplicateId(String),
    #[error("cannot start worker pool: {0}")]
    ThreadPool(String),
}

impl PipelineError {
    pub fn is_client_failure(&self) -> bool {
        matches!(self, PipelineError::ItemFailed { client: true, .. })
    }
}
