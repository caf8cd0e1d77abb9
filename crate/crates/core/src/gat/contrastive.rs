use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::EncoderError;
use crate::lingfeat::PosNegMatrix;

/// Which contrastive objective to optimise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContrastiveForm {
    /// `Σ_i −log( Σ_{P_i} exp(σ(E_i·E_j/τ)) / Σ_{N_i} exp(σ(E_i·E_k/τ)) )`.
    /// Bounded and possibly negative; the sigmoid saturates for large dots.
    #[default]
    Literal,
    /// Conventional InfoNCE: positives over positives plus negatives, no
    /// inner sigmoid.
    InfoNce,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastiveOutput {
    pub loss: f64,
    /// `∂loss/∂reps[i]` for every rep in the batch (zero for reps that never
    /// take part).
    pub grads: Vec<Array1<f64>>,
    /// Rows that contributed a term.
    pub anchors: usize,
    /// Rows skipped for lacking a positive or a negative inside the batch.
    pub skipped: usize,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Returns `log Σ exp(v)` and the softmax weights.
fn log_sum_exp(v: &[f64]) -> (f64, Vec<f64>) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    (max + sum.ln(), exps.into_iter().map(|e| e / sum).collect())
}

/// Loss summed over anchors, with gradients for every rep. `posneg` is
/// indexed by batch position.
pub fn contrastive_loss(
    reps: &[Array1<f64>],
    posneg: &PosNegMatrix,
    tau: f64,
    form: ContrastiveForm,
) -> Result<ContrastiveOutput, EncoderError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(EncoderError::InvalidParam(format!("tau must be positive, got {tau}")));
    }
    let n = reps.len();
    if posneg.n() != n {
        return Err(EncoderError::PosNegSize {
            expected: n,
            found: posneg.n(),
        });
    }
    let dim = reps.first().map_or(0, |r| r.len());
    if reps.iter().any(|r| r.len() != dim) {
        return Err(EncoderError::Shape("reps differ in width".into()));
    }

    let mut grads = vec![Array1::zeros(dim); n];
    let mut loss = 0.0;
    let mut anchors = 0;
    let mut skipped = 0;

    for i in 0..n {
        let pos = posneg.positives(i);
        let neg = posneg.negatives(i);
        if pos.is_empty() || neg.is_empty() {
            skipped += 1;
            continue;
        }
        anchors += 1;
        let scaled = |j: usize| reps[i].dot(&reps[j]) / tau;

        // coefficient of each ∂s_ij, with s_ij = E_i·E_j / τ
        let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(pos.len() + neg.len());
        match form {
            ContrastiveForm::Literal => {
                let q_pos: Vec<f64> = pos.iter().map(|&j| sigmoid(scaled(j))).collect();
                let q_neg: Vec<f64> = neg.iter().map(|&k| sigmoid(scaled(k))).collect();
                let (lse_pos, w_pos) = log_sum_exp(&q_pos);
                let (lse_neg, w_neg) = log_sum_exp(&q_neg);
                loss += lse_neg - lse_pos;
                for ((&j, q), w) in pos.iter().zip(&q_pos).zip(&w_pos) {
                    coeffs.push((j, -w * q * (1.0 - q)));
                }
                for ((&k, q), w) in neg.iter().zip(&q_neg).zip(&w_neg) {
                    coeffs.push((k, w * q * (1.0 - q)));
                }
            }
            ContrastiveForm::InfoNce => {
                let s_pos: Vec<f64> = pos.iter().map(|&j| scaled(j)).collect();
                let s_all: Vec<f64> = s_pos.iter().copied().chain(neg.iter().map(|&k| scaled(k))).collect();
                let (lse_pos, w_pos) = log_sum_exp(&s_pos);
                let (lse_all, w_all) = log_sum_exp(&s_all);
                loss += lse_all - lse_pos;
                for (idx, &j) in pos.iter().chain(neg).enumerate() {
                    let from_pos = if idx < pos.len() { w_pos[idx] } else { 0.0 };
                    coeffs.push((j, w_all[idx] - from_pos));
                }
            }
        }
        for (j, c) in coeffs {
            let c = c / tau;
            let (ri, rj) = (reps[i].clone(), reps[j].clone());
            grads[i].scaled_add(c, &rj);
            grads[j].scaled_add(c, &ri);
        }
    }

    Ok(ContrastiveOutput {
        loss,
        grads,
        anchors,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gat::numerical_gradient;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn triple() -> PosNegMatrix {
        // anchor 0: positive 1, negative 2; rows 1 and 2 are skipped
        PosNegMatrix::from_positive_sets(vec![vec![1], vec![0, 2], vec![0, 1]]).unwrap()
    }

    #[test]
    fn equal_dots_give_zero() {
        let reps = vec![array![1.0, 0.0], array![0.5, 0.3], array![0.5, -0.3]];
        let out = contrastive_loss(&reps, &triple(), 0.1, ContrastiveForm::Literal).unwrap();
        assert_eq!(out.loss, 0.0);
        assert_eq!(out.anchors, 1);
        assert_eq!(out.skipped, 2);
    }

    #[test]
    fn saturation_limit_is_minus_one() {
        let reps = vec![array![1.0, 0.0], array![1e4, 0.0], array![-1e4, 0.0]];
        let out = contrastive_loss(&reps, &triple(), 0.1, ContrastiveForm::Literal).unwrap();
        assert!((out.loss + 1.0).abs() < 1e-12, "{}", out.loss);
    }

    #[test]
    fn rejects_bad_tau() {
        let reps = vec![array![1.0], array![1.0], array![1.0]];
        assert!(contrastive_loss(&reps, &triple(), 0.0, ContrastiveForm::Literal).is_err());
        assert!(contrastive_loss(&reps, &triple(), -1.0, ContrastiveForm::Literal).is_err());
    }

    fn flat_loss(reps_flat: &[f64], dim: usize, pn: &PosNegMatrix, tau: f64, form: ContrastiveForm) -> f64 {
        let reps: Vec<Array1<f64>> = reps_flat.chunks(dim).map(|c| Array1::from(c.to_vec())).collect();
        contrastive_loss(&reps, pn, tau, form).unwrap().loss
    }

    #[test]
    fn gradients_match_finite_differences() {
        for form in [ContrastiveForm::Literal, ContrastiveForm::InfoNce] {
            for seed in 0..10u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let dim = 3;
                let flat: Vec<f64> = (0..4 * dim).map(|_| rng.gen_range(-0.6..0.6)).collect();
                let pn = PosNegMatrix::from_positive_sets(vec![vec![1], vec![0], vec![3], vec![2, 0]]).unwrap();
                let reps: Vec<Array1<f64>> = flat.chunks(dim).map(|c| Array1::from(c.to_vec())).collect();
                let out = contrastive_loss(&reps, &pn, 0.1, form).unwrap();
                let analytic: Vec<f64> = out.grads.iter().flat_map(|g| g.iter().copied()).collect();
                let numeric = numerical_gradient(|x| flat_loss(x, dim, &pn, 0.1, form), &flat, 1e-5);
                for (a, n) in analytic.iter().zip(&numeric) {
                    let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
                    assert!(rel < 1e-4, "{form:?} seed {seed}: {a} vs {n}");
                }
            }
        }
    }
}
