use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use super::{ComponentTriplet, Label, MetaphorRecord};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("record line {line}: {kind}")]
pub struct RecordError {
    pub line: usize,
    pub kind: RecordErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordErrorKind {
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("answer label out of range: {0:?}")]
    AnswerOutOfRange(String),
    #[error("option labels must be exactly A, B, C, D (found {0})")]
    OptionLabels(String),
    #[error("gold triplet has neither tenor nor vehicle")]
    InvalidGold,
    #[error("option {0} (the answer) does not match gold")]
    AnswerMismatch(Label),
    #[error("duplicate-of-gold distractor at option {0}")]
    DuplicateOfGold(Label),
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
}

/// What to do with a record that fails validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    /// Stop at the first bad record.
    #[default]
    Abort,
    /// Log the error, skip the record and keep going.
    SkipAndLog,
}

#[derive(Debug, Clone, Default)]
pub struct LoadOutcome {
    pub records: Vec<MetaphorRecord>,
    pub skipped: Vec<RecordError>,
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    sentence: String,
    gold: ComponentTriplet,
    options: BTreeMap<String, ComponentTriplet>,
    answer: String,
}

pub fn load_mci_records(path: &Path, strictness: Strictness) -> crate::Result<LoadOutcome> {
    let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
    Ok(parse_mci_records(&text, strictness)?)
}

/// Parses JSON-lines MCI records. Blank lines are ignored.
pub fn parse_mci_records(text: &str, strictness: Strictness) -> Result<LoadOutcome, RecordError> {
    let mut out = LoadOutcome::default();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let parsed = parse_line(line).and_then(|r| {
            if seen.contains(&r.id) {
                Err(RecordErrorKind::DuplicateId(r.id.clone()))
            } else {
                Ok(r)
            }
        });
        match parsed {
            Ok(r) => {
                seen.insert(r.id.clone());
                out.records.push(r);
            }
            Err(kind) => {
                let err = RecordError { line: lineno, kind };
                match strictness {
                    Strictness::Abort => return Err(err),
                    Strictness::SkipAndLog => {
                        log::warn!("skipping {err}");
                        out.skipped.push(err);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn parse_line(line: &str) -> Result<MetaphorRecord, RecordErrorKind> {
    let raw: RawRecord =
        serde_json::from_str(line).map_err(|e| RecordErrorKind::Malformed(e.to_string()))?;
    let answer: Label = raw
        .answer
        .parse()
        .map_err(|_| RecordErrorKind::AnswerOutOfRange(raw.answer.clone()))?;

    let mut options = BTreeMap::new();
    for (key, triplet) in raw.options {
        let label: Label = key.parse().map_err(|_| {
            RecordErrorKind::OptionLabels(format!("unexpected label {key:?}"))
        })?;
        options.insert(label, triplet.normalized());
    }
    if options.len() != 4 {
        let found: Vec<_> = options.keys().map(|l| l.as_str()).collect();
        return Err(RecordErrorKind::OptionLabels(found.join(",")));
    }

    let gold = raw.gold.normalized();
    if !gold.is_valid() {
        return Err(RecordErrorKind::InvalidGold);
    }
    if options[&answer] != gold {
        return Err(RecordErrorKind::AnswerMismatch(answer));
    }
    if let Some((&label, _)) = options.iter().find(|(&l, t)| l != answer && **t == gold) {
        return Err(RecordErrorKind::DuplicateOfGold(label));
    }

    Ok(MetaphorRecord {
        id: raw.id,
        sentence: raw.sentence,
        gold,
        options,
        answer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn valid() -> serde_json::Value {
        json!({
            "id": "r1",
            "sentence": "她的笑容像阳光一样温暖",
            "gold": {"tenor": "笑容", "vehicle": "阳光", "ground": "温暖"},
            "options": {
                "A": {"tenor": "阳光", "vehicle": "笑容", "ground": "温暖"},
                "B": {"tenor": "笑容", "vehicle": "阳光", "ground": "温暖"},
                "C": {"tenor": "笑容", "vehicle": "温暖", "ground": "阳光"},
                "D": {"tenor": "她", "vehicle": "阳光", "ground": "-"}
            },
            "answer": "B"
        })
    }

    #[test]
    fn one_valid_line() {
        let out = parse_mci_records(&valid().to_string(), Strictness::Abort).unwrap();
        assert_eq!(out.records.len(), 1);
        let r = &out.records[0];
        assert_eq!(r.answer, Label::B);
        assert!(r.check().is_ok());
        let equal_gold = r.options.values().filter(|t| **t == r.gold).count();
        assert_eq!(equal_gold, 1);
    }

    #[test]
    fn answer_out_of_range() {
        let mut v = valid();
        v["answer"] = json!("E");
        let err = parse_mci_records(&v.to_string(), Strictness::Abort).unwrap_err();
        assert_eq!(err.line, 1);
        assert!(err.to_string().contains("answer label out of range"));
    }

    #[test]
    fn duplicate_of_gold_distractor() {
        // B equals gold but the answer points at C, which is rewritten to gold
        let mut v = valid();
        v["options"]["C"] = v["gold"].clone();
        v["answer"] = json!("C");
        let err = parse_mci_records(&v.to_string(), Strictness::Abort).unwrap_err();
        assert_eq!(err.kind, RecordErrorKind::DuplicateOfGold(Label::B));
        assert!(err.to_string().contains("duplicate-of-gold distractor"));
    }

    #[test]
    fn missing_key_and_mismatch() {
        let mut v = valid();
        v.as_object_mut().unwrap().remove("gold");
        let err = parse_mci_records(&v.to_string(), Strictness::Abort).unwrap_err();
        assert!(err.to_string().contains("missing field `gold`"), "{err}");

        let mut v = valid();
        v["answer"] = json!("A");
        let err = parse_mci_records(&v.to_string(), Strictness::Abort).unwrap_err();
        assert_eq!(err.kind, RecordErrorKind::AnswerMismatch(Label::A));
    }

    #[test]
    fn skip_and_log_keeps_going() {
        let mut bad = valid();
        bad["answer"] = json!("E");
        let mut other = valid();
        other["id"] = json!("r2");
        let text = format!("{}\n\n{}\n{}\n", valid(), bad, other);
        let out = parse_mci_records(&text, Strictness::SkipAndLog).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.skipped.len(), 1);
        assert_eq!(out.skipped[0].line, 3);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = format!("{}\n{}\n", valid(), valid());
        let err = parse_mci_records(&text, Strictness::Abort).unwrap_err();
        assert_eq!(err.line, 2);
    }
}
