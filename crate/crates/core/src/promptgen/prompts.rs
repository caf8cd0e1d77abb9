use std::collections::{BTreeMap, HashSet};
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::Serialize;

use super::template::{PromptTemplate, TemplateKind};
use super::PromptError;
use crate::corpus::{ComponentTriplet, Label, MetaphorRecord, ABSENT};

pub fn render_distractor_prompt(sentence: &str, gold: &ComponentTriplet, template: &PromptTemplate) -> Result<String, PromptError> {
    template.expect_kind(TemplateKind::DistractorGen)?;
    template.render(&[("sentence", sentence), ("gold", &gold.bracketed())])
}

fn triplet_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\[([^\[\]|\n]*)\|([^\[\]|\n]*)\|([^\[\]|\n]*)\]").expect("valid regex"))
}

/// Extracts the first three lines holding a bracketed `[T|V|G]` triplet.
/// Surrounding prose and list markers are ignored.
pub fn parse_distractor_response(text: &str, gold: &ComponentTriplet) -> Result<[ComponentTriplet; 3], PromptError> {
    let gold = gold.normalized();
    let mut found = Vec::with_capacity(3);
    for (i, line) in text.lines().enumerate() {
        let Some(c) = triplet_re().captures(line) else {
            continue;
        };
        let t = ComponentTriplet::new(&c[1], &c[2], &c[3]);
        if t == gold {
            return Err(PromptError::EqualsGold { line: i + 1 });
        }
        found.push(t);
        if found.len() == 3 {
            break;
        }
    }
    found
        .try_into()
        .map_err(|v: Vec<ComponentTriplet>| PromptError::TooFewTriplets { found: v.len() })
}

/// First bracketed triplet in `text` other than the literal `skip`.
pub(crate) fn first_triplet(text: &str, skip: &str) -> Option<ComponentTriplet> {
    triplet_re()
        .captures_iter(text)
        .find(|c| &c[0] != skip)
        .map(|c| ComponentTriplet::new(&c[1], &c[2], &c[3]))
}

/// Rearrangements of `gold` that differ from it and from each other.
pub(crate) fn triplet_candidates(gold: &ComponentTriplet) -> Vec<ComponentTriplet> {
    let (t, v, g) = (gold.tenor.as_str(), gold.vehicle.as_str(), gold.ground.as_str());
    let raw = [
        (v, t, g),
        (t, g, v),
        (g, v, t),
        (t, v, ABSENT),
        (ABSENT, v, g),
        (t, ABSENT, g),
        (v, g, t),
        (g, t, v),
    ];
    let gold = gold.normalized();
    let mut out: Vec<ComponentTriplet> = Vec::new();
    for (a, b, c) in raw {
        let cand = ComponentTriplet::new(a, b, c);
        if cand != gold && !out.contains(&cand) {
            out.push(cand);
        }
    }
    let mut k = 1;
    while out.len() < 3 {
        let cand = ComponentTriplet::new(format!("{t}{k}"), v, g);
        if !out.contains(&cand) {
            out.push(cand);
        }
        k += 1;
    }
    out
}

/// Seeded shuffle of gold plus three distractors onto labels A to D.
pub fn assemble_options(
    gold: &ComponentTriplet,
    distractors: &[ComponentTriplet; 3],
    seed: u64,
) -> Result<(BTreeMap<Label, ComponentTriplet>, Label), PromptError> {
    let mut all = vec![gold.normalized()];
    all.extend(distractors.iter().map(ComponentTriplet::normalized));
    let mut seen = HashSet::new();
    for t in &all {
        if !seen.insert(t) {
            return Err(PromptError::DuplicateOption(t.bracketed()));
        }
    }
    let mut order = [0usize, 1, 2, 3];
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut options = BTreeMap::new();
    let mut answer = Label::A;
    for (label, &src) in Label::ALL.iter().zip(&order) {
        if src == 0 {
            answer = *label;
        }
        options.insert(*label, all[src].clone());
    }
    Ok((options, answer))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PretrainExample {
    pub instruction: String,
    pub output: String,
}

/// Instruction/response pair for tenor-vehicle extraction, as one JSON line.
pub fn render_pretrain_prompt(sentence: &str, tenor: &str, vehicle: &str, template: &PromptTemplate) -> Result<String, PromptError> {
    template.expect_kind(TemplateKind::PretrainSimile)?;
    let field = |s: &str| {
        if ComponentTriplet::is_absent(s) {
            ABSENT.to_string()
        } else {
            s.trim().to_string()
        }
    };
    let example = PretrainExample {
        instruction: template.render(&[("sentence", sentence)])?,
        output: format!("[{}|{}]", field(tenor), field(vehicle)),
    };
    Ok(serde_json::to_string(&example).expect("serializable"))
}

/// `A. [T|V|G]` lines in label order.
pub fn format_options(options: &BTreeMap<Label, ComponentTriplet>) -> String {
    options
        .iter()
        .map(|(l, t)| format!("{l}. {}", t.bracketed()))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Few-shot prompt: worked examples in the given order, then the query
/// without its answer.
pub fn render_task_prompt(record: &MetaphorRecord, examples: &[MetaphorRecord], template: &PromptTemplate) -> Result<String, PromptError> {
    template.expect_kind(TemplateKind::TaskIcl)?;
    if let Some(e) = examples.iter().find(|e| e.id == record.id) {
        return Err(PromptError::SelfLeak(e.id.clone()));
    }
    let blocks: Vec<String> = examples
        .iter()
        .enumerate()
        .map(|(i, e)| {
            format!(
                "Example {}\nSentence: {}\nOptions:\n{}\nAnswer: {}",
                i + 1,
                e.sentence,
                format_options(&e.options),
                e.answer
            )
        })
        .collect();
    template.render(&[
        ("examples", &blocks.join("\n\n")),
        ("sentence", &record.sentence),
        ("options", &format_options(&record.options)),
    ])
}
