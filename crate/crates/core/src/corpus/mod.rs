//! Corpus ingestion: dependency-parsed sentences (CoNLL-U), MCI task records
//! (JSON lines) and the dataset statistics summary.

mod conllu;
mod records;
mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use conllu::{parse_conllu, write_conllu, ConlluError};
pub use records::{load_mci_records, parse_mci_records, LoadOutcome, RecordError, Strictness};
pub use stats::{count_sub_sentences, dataset_stats, CorpusStats, DEFAULT_COMPARATORS};

/// Marker written for an absent metaphor component.
pub const ABSENT: &str = "-";

/// One row of a dependency parse. Positions are 1-based; `head_index == 0`
/// marks the root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub index: usize,
    pub surface: String,
    pub pos_tag: String,
    pub head_index: usize,
    pub dep_relation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedSentence {
    pub id: String,
    pub tokens: Vec<Token>,
}

impl ParsedSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Surface forms concatenated without separators (the corpus is Chinese).
    pub fn text(&self) -> String {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.surface.as_str())
    }
}

/// A `[tenor, vehicle, ground]` triplet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ComponentTriplet {
    pub tenor: String,
    pub vehicle: String,
    pub ground: String,
}

impl ComponentTriplet {
    /// Builds a triplet, mapping empty or blank fields to [`ABSENT`].
    pub fn new(tenor: impl Into<String>, vehicle: impl Into<String>, ground: impl Into<String>) -> Self {
        Self {
            tenor: normalize_field(tenor.into()),
            vehicle: normalize_field(vehicle.into()),
            ground: normalize_field(ground.into()),
        }
    }

    pub fn normalized(&self) -> Self {
        Self::new(self.tenor.clone(), self.vehicle.clone(), self.ground.clone())
    }

    pub fn is_absent(field: &str) -> bool {
        let f = field.trim();
        f.is_empty() || f == ABSENT
    }

    /// At least one of tenor or vehicle must be present.
    pub fn is_valid(&self) -> bool {
        !Self::is_absent(&self.tenor) || !Self::is_absent(&self.vehicle)
    }

    pub fn field(&self, c: Component) -> &str {
        match c {
            Component::Tenor => &self.tenor,
            Component::Vehicle => &self.vehicle,
            Component::Ground => &self.ground,
        }
    }

    /// Bracketed single-line form `[T|V|G]`.
    pub fn bracketed(&self) -> String {
        format!("[{}|{}|{}]", self.tenor, self.vehicle, self.ground)
    }
}

impl fmt::Display for ComponentTriplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bracketed())
    }
}

fn normalize_field(s: String) -> String {
    let t = s.trim();
    if t.is_empty() {
        ABSENT.to_string()
    } else if t.len() == s.len() {
        s
    } else {
        t.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    Tenor,
    Vehicle,
    Ground,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::Tenor, Component::Vehicle, Component::Ground];

    pub fn short(self) -> &'static str {
        match self {
            Component::Tenor => "T",
            Component::Vehicle => "V",
            Component::Ground => "G",
        }
    }
}

/// Option label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    A,
    B,
    C,
    D,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::A, Label::B, Label::C, Label::D];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::A => "A",
            Label::B => "B",
            Label::C => "C",
            Label::D => "D",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelOutOfRange(pub String);

impl FromStr for Label {
    type Err = LabelOutOfRange;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" => Ok(Label::A),
            "B" => Ok(Label::B),
            "C" => Ok(Label::C),
            "D" => Ok(Label::D),
            other => Err(LabelOutOfRange(other.to_string())),
        }
    }
}

/// Sentence with its gold triplet and four shuffled options.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaphorRecord {
    pub id: String,
    pub sentence: String,
    pub gold: ComponentTriplet,
    pub options: BTreeMap<Label, ComponentTriplet>,
    pub answer: Label,
}

impl MetaphorRecord {
    /// Checks the record invariants; returns a short reason on failure.
    pub fn check(&self) -> Result<(), String> {
        if !self.gold.is_valid() {
            return Err("gold triplet has neither tenor nor vehicle".into());
        }
        if self.options.len() != 4 {
            return Err(format!("expected 4 options, found {}", self.options.len()));
        }
        match self.options.get(&self.answer) {
            Some(t) if *t == self.gold => {}
            _ => return Err("answer option does not match gold".into()),
        }
        for (label, opt) in &self.options {
            if *label != self.answer && *opt == self.gold {
                return Err(format!("duplicate-of-gold distractor at option {label}"));
            }
        }
        Ok(())
    }

    pub fn option(&self, label: Label) -> &ComponentTriplet {
        &self.options[&label]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplet_blank_fields_become_absent() {
        let t = ComponentTriplet::new("他", "  ", "");
        assert_eq!(t.vehicle, ABSENT);
        assert_eq!(t.ground, ABSENT);
        assert!(t.is_valid());
        assert!(!ComponentTriplet::new("-", "", "g").is_valid());
    }

    #[test]
    fn label_parsing() {
        assert_eq!("C".parse::<Label>().unwrap(), Label::C);
        assert!("E".parse::<Label>().is_err());
        assert_eq!(Label::D.index(), 3);
    }
}
