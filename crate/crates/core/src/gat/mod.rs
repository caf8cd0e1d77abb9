//! Graph-attention sentence encoder.
//!
//! Tokens are graph nodes. An adaptive adjacency `A = σ(H W_lig Hᵀ)` gates a
//! single-head attention layer: entries with `A[i][j] ≤ δ` are masked out,
//! the rest receive a softmax over `LeakyReLU(aᵀ[W_a h_i ‖ W_a h_j])`. Token
//! representations `E_i = LayerNorm(Σ_j α_ij A_ij W_a h_j)` are mean-pooled
//! into the sentence vector. Training minimises a contrastive loss over
//! mined positive/negative sets with plain mini-batch gradient descent; all
//! gradients are derived by hand and checked against central differences.

mod contrastive;
mod embeddings;
mod gradcheck;
mod layer;
mod params;
mod train;

use thiserror::Error;

pub use contrastive::{contrastive_loss, ContrastiveForm, ContrastiveOutput};
pub use embeddings::{
    read_embeddings_bin, read_embeddings_jsonl, read_reps_jsonl, validate_corpus, write_embeddings_bin,
    write_embeddings_jsonl, write_reps_jsonl, HashEmbedder, SentenceRep, TokenEmbeddings, EMBEDDING_MAGIC,
};
pub use gradcheck::numerical_gradient;
pub use layer::{
    adaptive_adjacency, attention_coeffs, encode_sentence, forward, token_reps, Attention, Forward, TokenReps,
};
pub use params::{read_params, write_params, EncoderConfig, GatGrads, GatParams, MODEL_MAGIC};
pub use train::{batch_loss_and_grad, train, BatchResult, EpochStats, TrainConfig, TrainOutcome};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EncoderError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("non-finite {what} at epoch {epoch}, batch {batch}")]
    NonFinite {
        epoch: usize,
        batch: usize,
        what: &'static str,
    },
    #[error("embedding corpus is empty")]
    EmptyCorpus,
    #[error("sentence {0} has no token vectors")]
    EmptySentence(String),
    #[error("sentence {0} has non-finite embedding values")]
    NonFiniteInput(String),
    #[error("positive/negative matrix covers {found} sentences, corpus has {expected}")]
    PosNegSize { expected: usize, found: usize },
    #[error("epoch {0} had no anchor with both a positive and a negative in its batch")]
    NoAnchors(usize),
}
