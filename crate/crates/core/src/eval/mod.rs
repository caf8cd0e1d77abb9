//! Scoring of predictions against gold records.

mod metrics;
mod predictions;
mod ratio;
mod report;

use thiserror::Error;

pub use metrics::{component_accuracy, error_breakdown, label_for, score_choices, ChoiceScore, ComponentScores, ErrorBreakdown, ErrorType, Normalizer};
pub use predictions::{read_predictions, Prediction, PredictionMode, Predictions};
pub use ratio::{format_hundredths, round_half_even_hundredths, Ratio};
pub use report::{render_table, EvalReport};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("prediction line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("prediction file mixes label and triplet predictions (line {line})")]
    MixedModes { line: usize },
    #[error("expected {expected} predictions, file holds {found} predictions")]
    WrongMode { expected: PredictionMode, found: PredictionMode },
    #[error("prediction for unknown record id {0}")]
    UnknownId(String),
    #[error("duplicate prediction for id {0}")]
    DuplicateId(String),
    #[error("no gold records to score")]
    NoRecords,
}
