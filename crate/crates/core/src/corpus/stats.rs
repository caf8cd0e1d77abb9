use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetaphorRecord;

/// Default comparator markers used to flag simile sentences.
pub const DEFAULT_COMPARATORS: &[&str] = &["像", "好像", "如", "仿佛", "宛如", "犹如", "似"];

/// Dataset summary with the same columns as the MCI statistics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub sentence_count: usize,
    pub single_pct: f64,
    pub multiple_pct: f64,
    pub avg_sub_sents: f64,
    pub simile_pct: f64,
}

/// Number of sub-sentences: segments between commas (ASCII or fullwidth) and
/// whitespace runs. Consecutive separators count as one boundary and a
/// sentence always has at least one segment.
pub fn count_sub_sentences(sentence: &str) -> usize {
    sentence
        .split(|c: char| c == ',' || c == '，' || c.is_whitespace())
        .filter(|seg| !seg.is_empty())
        .count()
        .max(1)
}

/// Summarises `records`. `group_counts` maps record id to the number of gold
/// component groups; ids missing from it count as single-group.
pub fn dataset_stats(
    records: &[MetaphorRecord],
    comparators: &[impl AsRef<str>],
    group_counts: &HashMap<String, usize>,
) -> CorpusStats {
    let n = records.len();
    if n == 0 {
        return CorpusStats {
            sentence_count: 0,
            single_pct: 0.0,
            multiple_pct: 0.0,
            avg_sub_sents: 0.0,
            simile_pct: 0.0,
        };
    }
    let mut single = 0usize;
    let mut sub_sents = 0usize;
    let mut similes = 0usize;
    for r in records {
        if group_counts.get(&r.id).copied().unwrap_or(1) <= 1 {
            single += 1;
        }
        sub_sents += count_sub_sentences(&r.sentence);
        if comparators.iter().any(|m| {
            let m = m.as_ref();
            !m.is_empty() && r.sentence.contains(m)
        }) {
            similes += 1;
        }
    }
    let nf = n as f64;
    let single_pct = single as f64 / nf;
    CorpusStats {
        sentence_count: n,
        single_pct,
        multiple_pct: (n - single) as f64 / nf,
        avg_sub_sents: sub_sents as f64 / nf,
        simile_pct: similes as f64 / nf,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ComponentTriplet, Label};
    use std::collections::BTreeMap;

    fn record(id: &str, sentence: &str) -> MetaphorRecord {
        let gold = ComponentTriplet::new("t", "v", "g");
        let mut options = BTreeMap::new();
        options.insert(Label::A, gold.clone());
        options.insert(Label::B, ComponentTriplet::new("v", "t", "g"));
        options.insert(Label::C, ComponentTriplet::new("t", "g", "v"));
        options.insert(Label::D, ComponentTriplet::new("g", "v", "t"));
        MetaphorRecord {
            id: id.into(),
            sentence: sentence.into(),
            gold,
            options,
            answer: Label::A,
        }
    }

    #[test]
    fn single_record_direct_count() {
        let s = dataset_stats(
            &[record("a", "a,b c")],
            &[] as &[&str],
            &HashMap::from([("a".to_string(), 1)]),
        );
        assert_eq!(s.sentence_count, 1);
        assert_eq!(s.avg_sub_sents, 3.0);
        assert_eq!(s.single_pct, 1.0);
        assert_eq!(s.multiple_pct, 0.0);
        assert_eq!(s.simile_pct, 0.0);
    }

    #[test]
    fn nine_single_one_multiple() {
        let records: Vec<_> = (0..10).map(|i| record(&format!("r{i}"), "x")).collect();
        let groups: HashMap<_, _> = (0..10)
            .map(|i| (format!("r{i}"), if i == 7 { 2 } else { 1 }))
            .collect();
        // brute-force tally
        let single = groups.values().filter(|&&g| g == 1).count() as f64 / 10.0;
        let s = dataset_stats(&records, DEFAULT_COMPARATORS, &groups);
        assert_eq!(s.single_pct, single);
        assert_eq!(s.single_pct, 0.9);
        assert!((s.single_pct + s.multiple_pct - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sub_sentence_splitting() {
        assert_eq!(count_sub_sentences("没有分隔符"), 1);
        assert_eq!(count_sub_sentences("春风，  吹过,,大地"), 3);
        assert_eq!(count_sub_sentences("，，"), 1);
        assert_eq!(count_sub_sentences("a\u{3000}b"), 2);
    }

    #[test]
    fn empty_input_is_zeroed() {
        let s = dataset_stats(&[], DEFAULT_COMPARATORS, &HashMap::new());
        assert_eq!(s.sentence_count, 0);
        assert_eq!(s.avg_sub_sents, 0.0);
    }

    #[test]
    fn simile_markers() {
        let records = vec![record("a", "他像一座山"), record("b", "时间是金钱")];
        let s = dataset_stats(&records, DEFAULT_COMPARATORS, &HashMap::new());
        assert_eq!(s.simile_pct, 0.5);
    }
}
