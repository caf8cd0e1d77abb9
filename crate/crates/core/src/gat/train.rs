//! Mini-batch gradient descent over shuffled sentence batches.

use ndarray::{Array1, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contrastive::{contrastive_loss, ContrastiveForm};
use super::embeddings::{validate_corpus, TokenEmbeddings};
use super::layer::{forward, Forward};
use super::params::{EncoderConfig, GatGrads, GatParams};
use super::EncoderError;
use crate::lingfeat::PosNegMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            batch_size: 256,
            epochs: 10,
            seed: 0,
            init_scale: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), EncoderError> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(EncoderError::InvalidParam(format!("learning rate {}", self.learning_rate)));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(EncoderError::InvalidParam("batch size and epochs must be positive".into()));
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return Err(EncoderError::InvalidParam(format!("init scale {}", self.init_scale)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Summed batch loss divided by the number of contributing anchors.
    pub mean_loss: f64,
    pub anchors: usize,
    pub skipped_rows: usize,
    pub empty_attention_rows: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: GatParams,
    pub trace: Vec<EpochStats>,
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub loss: f64,
    pub grads: GatGrads,
    pub anchors: usize,
    pub skipped: usize,
    pub empty_attention_rows: usize,
}

/// Loss of one batch and its gradient with respect to every learnable
/// parameter. `posneg` is indexed by batch position.
pub fn batch_loss_and_grad(
    params: &GatParams,
    batch: &[ArrayView2<f64>],
    posneg: &PosNegMatrix,
    form: ContrastiveForm,
) -> Result<BatchResult, EncoderError> {
    let passes: Vec<Forward> = batch
        .par_iter()
        .map(|h| forward(*h, params))
        .collect::<Result<_, _>>()?;
    let reps: Vec<Array1<f64>> = passes.iter().map(|f| f.e_lig.clone()).collect();
    let out = contrastive_loss(&reps, posneg, params.tau, form)?;
    let parts: Vec<GatGrads> = passes
        .par_iter()
        .zip(out.grads.par_iter())
        .map(|(f, g)| f.backward(params, g))
        .collect();
    let mut grads = GatGrads::zeros(params.in_dim(), params.out_dim());
    for g in &parts {
        grads.add_assign(g);
    }
    Ok(BatchResult {
        loss: out.loss,
        grads,
        anchors: out.anchors,
        skipped: out.skipped,
        empty_attention_rows: passes.iter().map(|f| f.empty_rows().len()).sum(),
    })
}

pub fn train(
    corpus: &[TokenEmbeddings],
    posneg: &PosNegMatrix,
    encoder: &EncoderConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome, EncoderError> {
    let d = validate_corpus(corpus)?;
    encoder.validate()?;
    config.validate()?;
    if posneg.n() != corpus.len() {
        return Err(EncoderError::PosNegSize {
            expected: corpus.len(),
            found: posneg.n(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = GatParams::init(d, encoder, config.init_scale, &mut rng);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut trace = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss = 0.0;
        let mut stats = EpochStats {
            epoch,
            mean_loss: 0.0,
            anchors: 0,
            skipped_rows: 0,
            empty_attention_rows: 0,
        };
        for (b, members) in order.chunks(config.batch_size).enumerate() {
            let views: Vec<ArrayView2<f64>> = members.iter().map(|&i| corpus[i].vectors.view()).collect();
            let local = posneg.restrict(members);
            let res = batch_loss_and_grad(&params, &views, &local, encoder.form)?;
            let batch = b + 1;
            if !res.loss.is_finite() {
                return Err(EncoderError::NonFinite { epoch, batch, what: "loss" });
            }
            if !res.grads.is_finite() {
                return Err(EncoderError::NonFinite { epoch, batch, what: "gradient" });
            }
            loss += res.loss;
            stats.anchors += res.anchors;
            stats.skipped_rows += res.skipped;
            stats.empty_attention_rows += res.empty_attention_rows;
            if res.anchors > 0 {
                params.apply_gradient(&res.grads, config.learning_rate);
            }
        }
        if stats.anchors == 0 {
            return Err(EncoderError::NoAnchors(epoch));
        }
        stats.mean_loss = loss / stats.anchors as f64;
        log::debug!("epoch {epoch}: mean loss {:.6}, {} anchors", stats.mean_loss, stats.anchors);
        trace.push(stats);
    }
    Ok(TrainOutcome { params, trace })
}
