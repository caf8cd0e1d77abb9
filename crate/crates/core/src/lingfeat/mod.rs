//! Symbolic linguistic features.
//!
//! Every sentence becomes an `l × l × 2` integer feature matrix (an ordered
//! POS-pair plane and a dependency-relation plane). Two sentences are
//! compared by a Gaussian-weighted count of matching cells along the rows of
//! their central words (the tokens with most dependency arcs); the count is
//! squashed by a sigmoid into a similarity in `(0, 1)` and each row of the
//! resulting corpus matrix is split into top-K% positives and negatives.

mod container;
mod distance;
mod features;
mod inventory;
mod posneg;

use thiserror::Error;

pub use container::{
    read_feature_matrices, read_similarity_matrix, write_feature_matrices, write_similarity_matrix,
    FEATURE_MAGIC, SIMILARITY_MAGIC,
};
pub use distance::{
    gaussian_weights, sentence_distance, similarity, similarity_matrix, Sigma, SimilarityMatrix,
    SimilarityTransform,
};
pub use features::{build_feature_matrix, central_words, CentralWords, FeatureMatrix, SentenceProfile};
pub use inventory::Inventory;
pub use posneg::{build_posneg_matrix, positive_count, PosNegMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error("sentence {sentence}: token {index} ({surface:?}) has unregistered POS tag {tag:?}")]
    UnregisteredTag {
        sentence: String,
        index: usize,
        surface: String,
        tag: String,
    },
    #[error("sentence {sentence}: token {index} ({surface:?}) has unregistered relation {relation:?}")]
    UnregisteredRelation {
        sentence: String,
        index: usize,
        surface: String,
        relation: String,
    },
    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("central position {idx} outside 1..={len}")]
    CentralOutOfRange { idx: usize, len: usize },
    #[error("similarity transform needs center >= 0 and scale > 0, got center {center}, scale {scale}")]
    InvalidTransform { center: f64, scale: f64 },
    #[error("positive/negative mining needs at least 2 sentences, got {0}")]
    TooFewSentences(usize),
    #[error("K must be a percentage in (0, 100], got {0}")]
    InvalidPercent(f64),
    #[error("invalid positive/negative matrix: {0}")]
    InvalidPosNeg(String),
    #[error("empty sentence {0}")]
    EmptySentence(String),
}
