use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::client::LlmClient;
use super::prompts::{assemble_options, parse_distractor_response, render_distractor_prompt};
use super::template::PromptTemplate;
use super::PipelineError;
use crate::corpus::{ComponentTriplet, MetaphorRecord};

/// Appended to the prompt on every retry.
pub const RETRY_SUFFIX: &str = "\n\nformat exactly as instructed";

/// A sentence with its gold triplet, before distractors exist.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawItem {
    pub id: String,
    pub sentence: String,
    pub gold: ComponentTriplet,
}

/// Parses `{"id", "sentence", "gold": {"tenor", "vehicle", "ground"}}` lines.
pub fn read_raw_items(text: &str) -> crate::Result<Vec<RawItem>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut item: RawItem = serde_json::from_str(line).map_err(|source| crate::Error::Json {
            context: format!("raw item line {}", i + 1),
            source,
        })?;
        item.gold = item.gold.normalized();
        if !item.gold.is_valid() {
            return Err(PipelineError::InvalidGold(item.id).into());
        }
        if !seen.insert(item.id.clone()) {
            return Err(PipelineError::DuplicateId(item.id).into());
        }
        out.push(item);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineOptions {
    pub seed: u64,
    pub max_retries: u32,
    /// Worker threads; 0 uses the rayon default.
    pub jobs: usize,
    /// Abort on the first failed item instead of reporting it.
    pub strict: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            max_retries: 2,
            jobs: 0,
            strict: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemFailure {
    pub id: String,
    pub attempts: u32,
    pub reason: String,
    pub client_failure: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureReport {
    pub total: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub failures: Vec<ItemFailure>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub records: Vec<MetaphorRecord>,
    pub report: FailureReport,
}

/// Shuffle seed of one item: the first eight bytes of
/// `sha256(seed_le ‖ id)`, little-endian.
pub fn item_seed(seed: u64, id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(id.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("eight bytes"))
}

fn process_item(
    item: &RawItem,
    client: &dyn LlmClient,
    template: &PromptTemplate,
    opts: &PipelineOptions,
) -> Result<MetaphorRecord, ItemFailure> {
    let base = render_distractor_prompt(&item.sentence, &item.gold, template).map_err(|e| ItemFailure {
        id: item.id.clone(),
        attempts: 0,
        reason: e.to_string(),
        client_failure: false,
    })?;
    let mut last = (String::new(), false);
    for attempt in 0..=opts.max_retries {
        let prompt = if attempt == 0 {
            base.clone()
        } else {
            format!("{base}{RETRY_SUFFIX}")
        };
        let text = match client.complete(&prompt) {
            Ok(t) => t,
            Err(e) => {
                log::debug!("{}: attempt {} client error: {e}", item.id, attempt + 1);
                last = (e.to_string(), true);
                continue;
            }
        };
        let assembled = parse_distractor_response(&text, &item.gold)
            .and_then(|d| assemble_options(&item.gold, &d, item_seed(opts.seed, &item.id)));
        match assembled {
            Ok((options, answer)) => {
                return Ok(MetaphorRecord {
                    id: item.id.clone(),
                    sentence: item.sentence.clone(),
                    gold: item.gold.clone(),
                    options,
                    answer,
                })
            }
            Err(e) => {
                log::debug!("{}: attempt {} rejected: {e}", item.id, attempt + 1);
                last = (e.to_string(), false);
            }
        }
    }
    Err(ItemFailure {
        id: item.id.clone(),
        attempts: opts.max_retries + 1,
        reason: last.0,
        client_failure: last.1,
    })
}

/// Generates distractors for every item and assembles four-option records.
/// Output order follows input order whatever the completion order.
pub fn preprocess_pipeline(
    items: &[RawItem],
    client: &dyn LlmClient,
    template: &PromptTemplate,
    opts: &PipelineOptions,
) -> Result<PipelineOutput, PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| PipelineError::ThreadPool(e.to_string()))?;
    let results: Vec<Result<MetaphorRecord, ItemFailure>> =
        pool.install(|| items.par_iter().map(|it| process_item(it, client, template, opts)).collect());

    let mut records = Vec::with_capacity(items.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(f) => {
                if opts.strict {
                    return Err(PipelineError::ItemFailed {
                        id: f.id,
                        reason: f.reason,
                        client: f.client_failure,
                    });
                }
                log::warn!("item {} failed after {} attempts: {}", f.id, f.attempts, f.reason);
                failures.push(f);
            }
        }
    }
    Ok(PipelineOutput {
        report: FailureReport {
            total: items.len(),
            succeeded: records.len(),
            failed: failures.len(),
            failures,
        },
        records,
    })
}
