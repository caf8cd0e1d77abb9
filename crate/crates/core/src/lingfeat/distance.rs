use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CentralWords, FeatureError, FeatureMatrix, SentenceProfile};

/// Width of the Gaussian window around a central word.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum Sigma {
    Fixed(f64),
    /// `max(m / 4, 1)` where `m` is the compared length.
    #[default]
    Proportional,
}

impl Sigma {
    pub fn resolve(self, len: usize) -> Result<f64, FeatureError> {
        let s = match self {
            Sigma::Fixed(s) => s,
            Sigma::Proportional => (len as f64 / 4.0).max(1.0),
        };
        if s > 0.0 && s.is_finite() {
            Ok(s)
        } else {
            Err(FeatureError::InvalidSigma(s))
        }
    }
}

/// `w[k] = exp(-(k - idx)² / 2σ²)` for `k = 1..=len`; `idx` is 1-based.
pub fn gaussian_weights(len: usize, idx: usize, sigma: f64) -> Result<Vec<f64>, FeatureError> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(FeatureError::InvalidSigma(sigma));
    }
    if idx == 0 || idx > len {
        return Err(FeatureError::CentralOutOfRange { idx, len });
    }
    Ok(gaussian_profile(len, idx, sigma))
}

// No range check on `idx`: a central word past the compared prefix still
// weights the prefix by its true position.
fn gaussian_profile(len: usize, idx: usize, sigma: f64) -> Vec<f64> {
    let denom = 2.0 * sigma * sigma;
    (1..=len)
        .map(|k| {
            let d = k as f64 - idx as f64;
            (-(d * d) / denom).exp()
        })
        .collect()
}

/// Gaussian-weighted count of matching feature cells between the central
/// word rows of two sentences, averaged over all central-word pairs.
///
/// A cell matches when both the POS-pair and the dependency codes agree.
/// Columns beyond the shorter sentence are ignored, and the weights are
/// centred on the central word of the first sentence. Larger means more
/// alike.
pub fn sentence_distance(
    f1: &FeatureMatrix,
    c1: &CentralWords,
    f2: &FeatureMatrix,
    c2: &CentralWords,
    sigma: Sigma,
) -> Result<f64, FeatureError> {
    if c1.is_empty() || c2.is_empty() {
        return Ok(0.0);
    }
    let m = f1.len().min(f2.len());
    let sigma = sigma.resolve(m)?;
    let mut total = 0.0;
    for &ci in c1.indices() {
        let g = gaussian_profile(m, ci, sigma);
        let (p1, d1) = (f1.pos_row(ci - 1), f1.dep_row(ci - 1));
        for &cj in c2.indices() {
            let (p2, d2) = (f2.pos_row(cj - 1), f2.dep_row(cj - 1));
            total += (0..m)
                .filter(|&k| p1[k] == p2[k] && d1[k] == d2[k])
                .map(|k| g[k])
                .sum::<f64>();
        }
    }
    Ok(total / (c1.len() * c2.len()) as f64)
}

/// Sigmoid `1 / (1 + exp(-(L - center) / scale))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTransform {
    pub center: f64,
    pub scale: f64,
}

impl Default for SimilarityTransform {
    fn default() -> Self {
        Self {
            center: 0.0,
            scale: 1.0,
        }
    }
}

impl SimilarityTransform {
    pub fn new(center: f64, scale: f64) -> Result<Self, FeatureError> {
        if center >= 0.0 && center.is_finite() && scale > 0.0 && scale.is_finite() {
            Ok(Self { center, scale })
        } else {
            Err(FeatureError::InvalidTransform { center, scale })
        }
    }

    /// Result is clamped to the open interval, so saturated inputs still land
    /// strictly inside `(0, 1)`.
    pub fn apply(&self, l: f64) -> f64 {
        let x = (l - self.center) / self.scale;
        let s = if x >= 0.0 {
            1.0 / (1.0 + (-x).exp())
        } else {
            let e = x.exp();
            e / (1.0 + e)
        };
        s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
    }
}

/// Similarity with the default transform.
pub fn similarity(l: f64) -> f64 {
    SimilarityTransform::default().apply(l)
}

/// Dense `n × n` similarity scores, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    n: usize,
    scores: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(n: usize, scores: Vec<f64>) -> Option<Self> {
        (scores.len() == n * n).then_some(Self { n, scores })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.scores[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.scores[i * self.n..(i + 1) * self.n]
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
}

/// Scores every ordered pair of profiles. Rows are computed in parallel; each
/// cell is independent so the result does not depend on scheduling.
pub fn similarity_matrix(
    profiles: &[SentenceProfile],
    sigma: Sigma,
    transform: SimilarityTransform,
) -> Result<SimilarityMatrix, FeatureError> {
    let n = profiles.len();
    let rows: Result<Vec<Vec<f64>>, FeatureError> = profiles
        .par_iter()
        .map(|a| {
            profiles
                .iter()
                .map(|b| {
                    sentence_distance(&a.features, &a.central, &b.features, &b.central, sigma)
                        .map(|l| transform.apply(l))
                })
                .collect()
        })
        .collect();
    let scores = rows?.concat();
    Ok(SimilarityMatrix { n, scores })
}
