use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{FeatureError, SimilarityMatrix};

/// Per-sentence positive and negative sample sets. Column indices are sorted
/// ascending and the row itself is in neither set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosNegMatrix {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k_percent: Option<f64>,
    positives: Vec<Vec<usize>>,
    negatives: Vec<Vec<usize>>,
}

/// `max(1, floor(K/100 · (n − 1)))`.
pub fn positive_count(n: usize, k_percent: f64) -> usize {
    // K·(n−1) is exact for integral K, so the floor never lands on the wrong side
    let raw = (k_percent * (n - 1) as f64 / 100.0).floor() as usize;
    raw.clamp(1, n - 1)
}

/// Marks the top-K% columns of every row (self excluded) as positives; ties
/// at the cut go to the smaller column index.
pub fn build_posneg_matrix(scores: &SimilarityMatrix, k_percent: f64) -> Result<PosNegMatrix, FeatureError> {
    let n = scores.n();
    if n < 2 {
        return Err(FeatureError::TooFewSentences(n));
    }
    if !(k_percent > 0.0 && k_percent <= 100.0) {
        return Err(FeatureError::InvalidPercent(k_percent));
    }
    let take = positive_count(n, k_percent);
    let mut positives = Vec::with_capacity(n);
    let mut negatives = Vec::with_capacity(n);
    for i in 0..n {
        let row = scores.row(i);
        let mut cols: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        cols.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
        let mut pos = cols[..take].to_vec();
        let mut neg = cols[take..].to_vec();
        pos.sort_unstable();
        neg.sort_unstable();
        positives.push(pos);
        negatives.push(neg);
    }
    Ok(PosNegMatrix {
        n,
        k_percent: Some(k_percent),
        positives,
        negatives,
    })
}

impl PosNegMatrix {
    /// Builds a matrix from explicit positive sets; every other non-self
    /// column becomes a negative.
    pub fn from_positive_sets(positives: Vec<Vec<usize>>) -> Result<Self, FeatureError> {
        let n = positives.len();
        let mut pos_rows = Vec::with_capacity(n);
        let mut neg_rows = Vec::with_capacity(n);
        for (i, mut row) in positives.into_iter().enumerate() {
            row.sort_unstable();
            row.dedup();
            if row.iter().any(|&j| j >= n || j == i) {
                return Err(FeatureError::InvalidPosNeg(format!("row {i} has out-of-range or self column")));
            }
            let neg = (0..n).filter(|&j| j != i && row.binary_search(&j).is_err()).collect();
            pos_rows.push(row);
            neg_rows.push(neg);
        }
        Ok(Self {
            n,
            k_percent: None,
            positives: pos_rows,
            negatives: neg_rows,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_percent(&self) -> Option<f64> {
        self.k_percent
    }

    pub fn positives(&self, i: usize) -> &[usize] {
        &self.positives[i]
    }

    pub fn negatives(&self, i: usize) -> &[usize] {
        &self.negatives[i]
    }

    pub fn is_positive(&self, i: usize, j: usize) -> bool {
        self.positives[i].binary_search(&j).is_ok()
    }

    /// Submatrix over `members` (corpus indices), re-indexed to batch
    /// positions.
    pub fn restrict(&self, members: &[usize]) -> PosNegMatrix {
        let m = members.len();
        let mut positives = Vec::with_capacity(m);
        let mut negatives = Vec::with_capacity(m);
        for (a, &i) in members.iter().enumerate() {
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for (b, &j) in members.iter().enumerate() {
                if a == b || i == j {
                    continue;
                }
                if self.is_positive(i, j) {
                    pos.push(b);
                } else {
                    neg.push(b);
                }
            }
            positives.push(pos);
            negatives.push(neg);
        }
        PosNegMatrix {
            n: m,
            k_percent: None,
            positives,
            negatives,
        }
    }

    /// Checks that every row partitions its non-self columns.
    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.positives.len() != self.n || self.negatives.len() != self.n {
            return Err(FeatureError::InvalidPosNeg("row count differs from n".into()));
        }
        for i in 0..self.n {
            let mut all: Vec<usize> = self.positives[i].iter().chain(&self.negatives[i]).copied().collect();
            all.sort_unstable();
            let expected: Vec<usize> = (0..self.n).filter(|&j| j != i).collect();
            if all != expected {
                return Err(FeatureError::InvalidPosNeg(format!("row {i} is not a partition of the other columns")));
            }
            if !self.positives[i].windows(2).all(|w| w[0] < w[1]) || !self.negatives[i].windows(2).all(|w| w[0] < w[1]) {
                return Err(FeatureError::InvalidPosNeg(format!("row {i} is not sorted")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_scores(n: usize, seed: u64, levels: u32) -> SimilarityMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // few distinct levels so ties actually happen
        let scores = (0..n * n).map(|_| (rng.gen_range(1..levels) as f64) / levels as f64).collect();
        SimilarityMatrix::new(n, scores).unwrap()
    }

    /// Full sort of (score desc, index asc) per row.
    pub(crate) fn oracle(scores: &SimilarityMatrix, k: f64) -> Vec<Vec<usize>> {
        let n = scores.n();
        let take = ((k / 100.0 * (n - 1) as f64) + 1e-9).floor().max(1.0) as usize;
        (0..n)
            .map(|i| {
                let mut pairs: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (scores.get(i, j), j)).collect();
                pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
                let mut pos: Vec<usize> = pairs[..take].iter().map(|p| p.1).collect();
                pos.sort();
                pos
            })
            .collect()
    }

    #[test]
    fn k20_n11_gives_two_positives() {
        let m = build_posneg_matrix(&random_scores(11, 3, 50), 20.0).unwrap();
        for i in 0..11 {
            assert_eq!(m.positives(i).len(), 2);
            assert_eq!(m.negatives(i).len(), 8);
        }
        m.validate().unwrap();
    }

    #[test]
    fn n2_single_positive() {
        let s = SimilarityMatrix::new(2, vec![0.9, 0.1, 0.2, 0.8]).unwrap();
        let m = build_posneg_matrix(&s, 20.0).unwrap();
        assert_eq!(m.positives(0), &[1]);
        assert_eq!(m.positives(1), &[0]);
        assert!(m.negatives(0).is_empty());
    }

    #[test]
    fn n6_k40_matches_sort_oracle() {
        for seed in 0..20 {
            let s = random_scores(6, seed, 5);
            let m = build_posneg_matrix(&s, 40.0).unwrap();
            let want = oracle(&s, 40.0);
            for (i, row) in want.iter().enumerate() {
                assert_eq!(m.positives(i), row.as_slice(), "seed {seed} row {i}");
            }
        }
    }

    #[test]
    fn errors() {
        let one = SimilarityMatrix::new(1, vec![0.5]).unwrap();
        assert!(matches!(build_posneg_matrix(&one, 20.0), Err(FeatureError::TooFewSentences(1))));
        let two = random_scores(2, 1, 4);
        assert!(build_posneg_matrix(&two, 0.0).is_err());
        assert!(build_posneg_matrix(&two, 100.5).is_err());
        assert_eq!(build_posneg_matrix(&random_scores(5, 1, 4), 100.0).unwrap().positives(0).len(), 4);
    }

    #[test]
    fn restrict_reindexes() {
        let m = PosNegMatrix::from_positive_sets(vec![vec![1], vec![0, 3], vec![3], vec![2]]).unwrap();
        m.validate().unwrap();
        let r = m.restrict(&[3, 1, 2]);
        assert_eq!(r.positives(0), &[2]);
        assert_eq!(r.negatives(0), &[1]);
        assert_eq!(r.positives(1), &[0]);
        assert_eq!(r.negatives(2), &[1]);
        assert!(PosNegMatrix::from_positive_sets(vec![vec![0]]).is_err());
    }

    #[test]
    fn json_roundtrip_validates() {
        let m = build_posneg_matrix(&random_scores(6, 9, 7), 40.0).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        let back: PosNegMatrix = serde_json::from_str(&json).unwrap();
        back.validate().unwrap();
        assert_eq!(back, m);
    }
}
