use std::collections::HashMap;
use std::fmt;

use serde::{Serialize, Serializer};

use super::predictions::{Prediction, PredictionMode, Predictions};
use super::ratio::Ratio;
use super::EvalError;
use crate::corpus::{Component, ComponentTriplet, Label, MetaphorRecord};

/// String equality used when grading a component.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Normalizer {
    /// Whitespace-trimmed exact match.
    #[default]
    Trim,
    /// Trimmed match, or either string containing the other. The absent
    /// marker still needs an exact match.
    Containment,
}

impl Normalizer {
    pub fn matches(self, predicted: &str, gold: &str) -> bool {
        let (p, g) = (predicted.trim(), gold.trim());
        if p == g {
            return true;
        }
        match self {
            Normalizer::Trim => false,
            Normalizer::Containment => {
                !ComponentTriplet::is_absent(p) && !ComponentTriplet::is_absent(g) && (p.contains(g) || g.contains(p))
            }
        }
    }
}

fn index_records(records: &[MetaphorRecord]) -> Result<HashMap<&str, usize>, EvalError> {
    if records.is_empty() {
        return Err(EvalError::NoRecords);
    }
    Ok(records.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect())
}

/// Aligns predictions with records. Records without a prediction map to
/// `None` and are graded as wrong.
fn align<'a>(records: &[MetaphorRecord], preds: &'a Predictions, mode: PredictionMode) -> Result<Vec<Option<&'a Prediction>>, EvalError> {
    if preds.mode != mode && !preds.items.is_empty() {
        return Err(EvalError::WrongMode { expected: mode, found: preds.mode });
    }
    let index = index_records(records)?;
    let mut out = vec![None; records.len()];
    for p in &preds.items {
        let &i = index.get(p.id()).ok_or_else(|| EvalError::UnknownId(p.id().to_string()))?;
        if out[i].is_some() {
            return Err(EvalError::DuplicateId(p.id().to_string()));
        }
        out[i] = Some(p);
    }
    let missing = out.iter().filter(|p| p.is_none()).count();
    if missing > 0 {
        log::warn!("{missing} records have no prediction and count as wrong");
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChoiceScore {
    pub accuracy: Ratio,
    pub missing: u64,
}

/// Option-choice accuracy over all records.
pub fn score_choices(records: &[MetaphorRecord], preds: &Predictions) -> Result<ChoiceScore, EvalError> {
    let aligned = align(records, preds, PredictionMode::Label)?;
    let mut correct = 0;
    let mut missing = 0;
    for (r, p) in records.iter().zip(&aligned) {
        match p {
            Some(Prediction::Label { label, .. }) if *label == r.answer => correct += 1,
            None => missing += 1,
            _ => {}
        }
    }
    Ok(ChoiceScore {
        accuracy: Ratio::new(correct, records.len() as u64),
        missing,
    })
}

/// Components a prediction gets wrong; all three when it is missing.
fn wrong_components(gold: &ComponentTriplet, p: Option<&Prediction>, norm: Normalizer) -> [bool; 3] {
    match p {
        Some(Prediction::Triplet { triplet, .. }) => Component::ALL.map(|c| !norm.matches(triplet.field(c), gold.field(c))),
        _ => [true; 3],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ComponentScores {
    pub tenor: Ratio,
    pub vehicle: Ratio,
    pub ground: Ratio,
    /// All three components right.
    pub exact: Ratio,
}

pub fn component_accuracy(records: &[MetaphorRecord], preds: &Predictions, norm: Normalizer) -> Result<ComponentScores, EvalError> {
    let aligned = align(records, preds, PredictionMode::Triplet)?;
    let mut right = [0u64; 3];
    let mut exact = 0;
    for (r, p) in records.iter().zip(&aligned) {
        let wrong = wrong_components(&r.gold, *p, norm);
        for (k, w) in wrong.iter().enumerate() {
            right[k] += u64::from(!w);
        }
        exact += u64::from(wrong == [false; 3]);
    }
    let n = records.len() as u64;
    Ok(ComponentScores {
        tenor: Ratio::new(right[0], n),
        vehicle: Ratio::new(right[1], n),
        ground: Ratio::new(right[2], n),
        exact: Ratio::new(exact, n),
    })
}

/// Exact set of wrong components in an erroneous prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorType {
    T,
    V,
    G,
    TV,
    TG,
    VG,
    TVG,
}

impl ErrorType {
    pub const ALL: [ErrorType; 7] = [ErrorType::T, ErrorType::V, ErrorType::G, ErrorType::TV, ErrorType::TG, ErrorType::VG, ErrorType::TVG];

    /// `None` when nothing is wrong.
    pub fn classify(wrong: [bool; 3]) -> Option<Self> {
        Some(match wrong {
            [false, false, false] => return None,
            [true, false, false] => ErrorType::T,
            [false, true, false] => ErrorType::V,
            [false, false, true] => ErrorType::G,
            [true, true, false] => ErrorType::TV,
            [true, false, true] => ErrorType::TG,
            [false, true, true] => ErrorType::VG,
            [true, true, true] => ErrorType::TVG,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorType::T => "T",
            ErrorType::V => "V",
            ErrorType::G => "G",
            ErrorType::TV => "T-V",
            ErrorType::TG => "T-G",
            ErrorType::VG => "V-G",
            ErrorType::TVG => "T-V-G",
        }
    }

    pub fn involves(self, c: Component) -> bool {
        self.as_str().split('-').any(|s| s == c.short())
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for ErrorType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorBreakdown {
    pub errors: u64,
    /// One entry per type, in [`ErrorType::ALL`] order.
    pub types: Vec<(ErrorType, Ratio)>,
}

impl ErrorBreakdown {
    pub fn count(&self, t: ErrorType) -> u64 {
        self.get(t).num
    }

    pub fn get(&self, t: ErrorType) -> Ratio {
        self.types[t as usize].1
    }

    /// Share of records with a wrong ground among those with a wrong tenor,
    /// from the raw counts.
    pub fn ground_within_tenor(&self) -> Ratio {
        let tenor: Vec<ErrorType> = ErrorType::ALL.into_iter().filter(|t| t.involves(Component::Tenor)).collect();
        let num = tenor.iter().filter(|t| t.involves(Component::Ground)).map(|&t| self.count(t)).sum();
        let den = tenor.iter().map(|&t| self.count(t)).sum();
        Ratio::new(num, den)
    }

    /// The same share computed from the already-rounded two-decimal
    /// percentages, as a table reader would.
    pub fn ground_within_tenor_from_rounded(&self) -> Ratio {
        let tenor: Vec<ErrorType> = ErrorType::ALL.into_iter().filter(|t| t.involves(Component::Tenor)).collect();
        let num = tenor.iter().filter(|t| t.involves(Component::Ground)).map(|&t| self.get(t).hundredths()).sum();
        let den = tenor.iter().map(|&t| self.get(t).hundredths()).sum();
        Ratio::new(num, den)
    }
}

impl Serialize for ErrorBreakdown {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;

        struct Types<'a>(&'a [(ErrorType, Ratio)]);
        impl Serialize for Types<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                use serde::ser::SerializeMap;
                let mut m = s.serialize_map(Some(self.0.len()))?;
                for (t, r) in self.0 {
                    m.serialize_entry(t.as_str(), r)?;
                }
                m.end()
            }
        }

        let mut st = s.serialize_struct("ErrorBreakdown", 3)?;
        st.serialize_field("errors", &self.errors)?;
        st.serialize_field("types", &Types(&self.types))?;
        st.serialize_field("ground_within_tenor", &self.ground_within_tenor())?;
        st.end()
    }
}

pub fn error_breakdown(records: &[MetaphorRecord], preds: &Predictions, norm: Normalizer) -> Result<ErrorBreakdown, EvalError> {
    let aligned = align(records, preds, PredictionMode::Triplet)?;
    let mut counts = [0u64; 7];
    for (r, p) in records.iter().zip(&aligned) {
        if let Some(t) = ErrorType::classify(wrong_components(&r.gold, *p, norm)) {
            counts[t as usize] += 1;
        }
    }
    let errors = counts.iter().sum();
    Ok(ErrorBreakdown {
        errors,
        types: ErrorType::ALL.into_iter().map(|t| (t, Ratio::new(counts[t as usize], errors))).collect(),
    })
}

/// Label whose option equals `triplet`, if any.
pub fn label_for(record: &MetaphorRecord, triplet: &ComponentTriplet) -> Option<Label> {
    record.options.iter().find(|(_, t)| *t == triplet).map(|(l, _)| *l)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::promptgen::assemble_options;

    pub(crate) fn records(n: usize) -> Vec<MetaphorRecord> {
        (0..n)
            .map(|i| {
                let gold = ComponentTriplet::new(format!("t{i}"), format!("v{i}"), format!("g{i}"));
                let d = [
                    ComponentTriplet::new("x", format!("v{i}"), format!("g{i}")),
                    ComponentTriplet::new(format!("t{i}"), "x", format!("g{i}")),
                    ComponentTriplet::new(format!("t{i}"), format!("v{i}"), "x"),
                ];
                let (options, answer) = assemble_options(&gold, &d, i as u64).unwrap();
                MetaphorRecord { id: format!("r{i}"), sentence: format!("s{i}"), gold, options, answer }
            })
            .collect()
    }

    fn triplets(recs: &[MetaphorRecord]) -> Vec<Prediction> {
        recs.iter().map(|r| Prediction::Triplet { id: r.id.clone(), triplet: r.gold.clone() }).collect()
    }

    #[test]
    fn perfect_and_empty_scores() {
        let recs = records(5);
        let labels = recs.iter().map(|r| Prediction::Label { id: r.id.clone(), label: r.answer }).collect();
        let s = score_choices(&recs, &Predictions::new(labels).unwrap()).unwrap();
        assert_eq!(s.accuracy.percent_str(), "100.00");
        let none = score_choices(&recs, &Predictions::new(vec![]).unwrap()).unwrap();
        assert_eq!((none.accuracy.num, none.missing), (0, 5));
        let c = component_accuracy(&recs, &Predictions::new(triplets(&recs)).unwrap(), Normalizer::Trim).unwrap();
        assert_eq!([c.tenor.num, c.vehicle.num, c.ground.num, c.exact.num], [5; 4]);
    }

    #[test]
    fn id_errors() {
        let recs = records(2);
        let unknown = Predictions::new(vec![Prediction::Label { id: "zz".into(), label: Label::A }]).unwrap();
        assert_eq!(score_choices(&recs, &unknown), Err(EvalError::UnknownId("zz".into())));
        let trip = Predictions::new(triplets(&recs)).unwrap();
        assert!(matches!(score_choices(&recs, &trip), Err(EvalError::WrongMode { .. })));
    }

    #[test]
    fn flipped_vehicles() {
        let recs = records(10);
        let mut preds = triplets(&recs);
        for p in preds.iter_mut().take(3) {
            if let Prediction::Triplet { triplet, .. } = p {
                triplet.vehicle = "wrong".into();
            }
        }
        let preds = Predictions::new(preds).unwrap();
        let c = component_accuracy(&recs, &preds, Normalizer::Trim).unwrap();
        assert_eq!(c.vehicle.percent_str(), "70.00");
        assert_eq!(c.tenor.percent_str(), "100.00");
        let e = error_breakdown(&recs, &preds, Normalizer::Trim).unwrap();
        assert_eq!(e.errors, 3);
        assert_eq!(e.count(ErrorType::V), 3);
        assert_eq!(e.get(ErrorType::V).percent_str(), "100.00");
        assert_eq!(c.exact.num, recs.len() as u64 - e.errors);
    }

    #[test]
    fn ground_only_error() {
        let recs = records(1);
        let p = Prediction::Triplet { id: "r0".into(), triplet: ComponentTriplet::new("t0", " v0 ", "nope") };
        let e = error_breakdown(&recs, &Predictions::new(vec![p]).unwrap(), Normalizer::Trim).unwrap();
        assert_eq!(e.get(ErrorType::G).percent_str(), "100.00");
    }

    #[test]
    fn containment_normalizer() {
        assert!(Normalizer::Containment.matches("月光", "皎洁的月光"));
        assert!(!Normalizer::Trim.matches("月光", "皎洁的月光"));
        assert!(!Normalizer::Containment.matches("-", "月光"));
    }

    #[test]
    fn classification_partitions_all_masks() {
        let mut seen = std::collections::HashSet::new();
        for m in 1u8..8 {
            let t = ErrorType::classify([m & 1 != 0, m & 2 != 0, m & 4 != 0]).unwrap();
            assert!(seen.insert(t));
            assert_eq!(t.involves(Component::Tenor), m & 1 != 0);
            assert_eq!(t.involves(Component::Ground), m & 4 != 0);
        }
        assert_eq!(ErrorType::classify([false; 3]), None);
    }
}
