//! Linguistics-aware in-context example retrieval for metaphor components
//! identification (MCI).
//!
//! The crate is organised around the workflow stages:
//!
//! - [`corpus`]: CoNLL-U ingestion, MCI task records and dataset statistics.
//! - [`lingfeat`]: symbolic POS / dependency feature matrices, the Gaussian
//!   weighted match score between sentences and positive/negative mining.
//! - [`gat`]: single-layer graph attention sentence encoder with hand-written
//!   backpropagation and the contrastive training loop.
//! - [`retriever`]: exact nearest-neighbour index over sentence vectors.
//! - [`promptgen`]: prompt templates, distractor generation through an LLM
//!   client and option shuffling.
//! - [`eval`]: accuracy, per-component accuracy and error taxonomy.
//! - [`workflow`]: config, manifest and stage orchestration used by the CLI.

pub mod binio;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod gat;
pub mod lingfeat;
pub mod promptgen;
pub mod retriever;
pub mod workflow;

pub use error::{Error, Result};

/// Crate version recorded in artifact manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
