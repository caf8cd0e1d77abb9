use std::collections::HashSet;
use std::fmt;

use serde::Deserialize;

use super::EvalError;
use crate::corpus::{ComponentTriplet, Label};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionMode {
    Label,
    Triplet,
}

impl fmt::Display for PredictionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PredictionMode::Label => "label",
            PredictionMode::Triplet => "triplet",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Prediction {
    Label { id: String, label: Label },
    Triplet { id: String, triplet: ComponentTriplet },
}

impl Prediction {
    pub fn id(&self) -> &str {
        match self {
            Prediction::Label { id, .. } | Prediction::Triplet { id, .. } => id,
        }
    }

    pub fn mode(&self) -> PredictionMode {
        match self {
            Prediction::Label { .. } => PredictionMode::Label,
            Prediction::Triplet { .. } => PredictionMode::Triplet,
        }
    }
}

/// A prediction file: one mode throughout, ids unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predictions {
    pub mode: PredictionMode,
    pub items: Vec<Prediction>,
}

impl Predictions {
    pub fn new(items: Vec<Prediction>) -> Result<Self, EvalError> {
        let mode = items.first().map_or(PredictionMode::Label, Prediction::mode);
        let mut seen = HashSet::new();
        for (i, p) in items.iter().enumerate() {
            if p.mode() != mode {
                return Err(EvalError::MixedModes { line: i + 1 });
            }
            if !seen.insert(p.id()) {
                return Err(EvalError::DuplicateId(p.id().to_string()));
            }
        }
        Ok(Self { mode, items })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Line {
    id: String,
    label: Option<String>,
    tenor: Option<String>,
    vehicle: Option<String>,
    ground: Option<String>,
}

/// Parses `{"id", "label"}` or `{"id", "tenor", "vehicle", "ground"}` lines.
pub fn read_predictions(text: &str) -> Result<Predictions, EvalError> {
    let mut items = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let line = i + 1;
        let l: Line = serde_json::from_str(raw).map_err(|e| EvalError::Malformed { line, reason: e.to_string() })?;
        let has_triplet = l.tenor.is_some() || l.vehicle.is_some() || l.ground.is_some();
        let p = match (l.label, has_triplet) {
            (Some(label), false) => Prediction::Label {
                id: l.id,
                label: label.parse().map_err(|_| EvalError::Malformed {
                    line,
                    reason: format!("label {label:?} is not one of A, B, C, D"),
                })?,
            },
            (None, true) => Prediction::Triplet {
                id: l.id,
                triplet: ComponentTriplet::new(
                    l.tenor.unwrap_or_default(),
                    l.vehicle.unwrap_or_default(),
                    l.ground.unwrap_or_default(),
                ),
            },
            (Some(_), true) => return Err(EvalError::Malformed { line, reason: "both label and triplet fields".into() }),
            (None, false) => return Err(EvalError::Malformed { line, reason: "neither label nor triplet fields".into() }),
        };
        if let Some(first) = items.first().map(Prediction::mode) {
            if first != p.mode() {
                return Err(EvalError::MixedModes { line });
            }
        }
        items.push(p);
    }
    Predictions::new(items)
}
