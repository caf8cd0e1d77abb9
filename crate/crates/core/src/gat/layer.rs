use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::{EncoderError, GatGrads, GatParams, SentenceRep, TokenEmbeddings};

const LN_EPS: f64 = 1e-5;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `A = σ(H W_lig Hᵀ)`.
pub fn adaptive_adjacency(h: ArrayView2<f64>, w_lig: ArrayView2<f64>) -> Result<Array2<f64>, EncoderError> {
    let d = h.ncols();
    if w_lig.nrows() != d || w_lig.ncols() != d {
        return Err(EncoderError::Shape(format!(
            "H is {}x{d} but W_lig is {}x{}",
            h.nrows(),
            w_lig.nrows(),
            w_lig.ncols()
        )));
    }
    Ok(h.dot(&w_lig).dot(&h.t()).mapv(sigmoid))
}

/// Attention weights plus the rows whose mask was empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Attention {
    pub alpha: Array2<f64>,
    /// Raw attention logits `aᵀ[z_i ‖ z_j]` before LeakyReLU.
    pub logits: Array2<f64>,
    /// Rows with no entry above δ; their alpha row is all zero.
    pub empty_rows: Vec<usize>,
}

fn check_h(h: ArrayView2<f64>, p: &GatParams) -> Result<(), EncoderError> {
    if h.ncols() != p.in_dim() {
        return Err(EncoderError::Shape(format!("embeddings have width {}, encoder expects {}", h.ncols(), p.in_dim())));
    }
    Ok(())
}

fn check_square(a: &Array2<f64>, n: usize) -> Result<(), EncoderError> {
    if a.dim() != (n, n) {
        return Err(EncoderError::Shape(format!("adjacency is {:?}, expected {n}x{n}", a.dim())));
    }
    Ok(())
}

fn attention_from_projection(z: &Array2<f64>, a: &Array2<f64>, p: &GatParams) -> Attention {
    let (n, da) = z.dim();
    let a_src = p.a_vec.slice(ndarray::s![..da]);
    let a_dst = p.a_vec.slice(ndarray::s![da..]);
    let src: Array1<f64> = z.dot(&a_src);
    let dst: Array1<f64> = z.dot(&a_dst);
    let mut logits = Array2::zeros((n, n));
    let mut alpha = Array2::zeros((n, n));
    let mut empty_rows = Vec::new();
    for i in 0..n {
        let mut max = f64::NEG_INFINITY;
        for j in 0..n {
            let e = src[i] + dst[j];
            logits[[i, j]] = e;
            if a[[i, j]] > p.delta {
                max = max.max(leaky(e, p.leaky_slope));
            }
        }
        if max == f64::NEG_INFINITY {
            empty_rows.push(i);
            continue;
        }
        let mut sum = 0.0;
        for j in 0..n {
            if a[[i, j]] > p.delta {
                let w = (leaky(logits[[i, j]], p.leaky_slope) - max).exp();
                alpha[[i, j]] = w;
                sum += w;
            }
        }
        alpha.row_mut(i).mapv_inplace(|w| w / sum);
    }
    Attention {
        alpha,
        logits,
        empty_rows,
    }
}

fn leaky(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

fn leaky_grad(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        slope
    }
}

/// Masked softmax of `LeakyReLU(aᵀ[W_a h_i ‖ W_a h_j])` over `{j : A[i][j] > δ}`.
pub fn attention_coeffs(h: ArrayView2<f64>, a: &Array2<f64>, p: &GatParams) -> Result<Attention, EncoderError> {
    check_h(h, p)?;
    check_square(a, h.nrows())?;
    let z = h.dot(&p.w_a);
    Ok(attention_from_projection(&z, a, p))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenReps {
    pub e: Array2<f64>,
    /// Rows that fell back to `layernorm(0) = bias` because their attention
    /// mask was empty.
    pub empty_rows: Vec<usize>,
}

struct Normalized {
    out: Array2<f64>,
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
}

fn layer_norm(u: &Array2<f64>, p: &GatParams) -> Normalized {
    let (n, da) = u.dim();
    let mut xhat = Array2::zeros((n, da));
    let mut inv_std = Array1::zeros(n);
    for i in 0..n {
        let row = u.row(i);
        let mean = row.sum() / da as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / da as f64;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        inv_std[i] = inv;
        for k in 0..da {
            xhat[[i, k]] = (u[[i, k]] - mean) * inv;
        }
    }
    let out = &xhat * &p.ln_gain + &p.ln_bias;
    Normalized { out, xhat, inv_std }
}

fn aggregate(alpha: &Array2<f64>, a: &Array2<f64>, z: &Array2<f64>) -> Array2<f64> {
    // alpha is zero outside the mask, so the elementwise product is the masked weight
    (alpha * a).dot(z)
}

/// `E_i = LayerNorm(Σ_j α_ij A_ij W_a h_j)`.
pub fn token_reps(h: ArrayView2<f64>, a: &Array2<f64>, alpha: &Array2<f64>, p: &GatParams) -> Result<TokenReps, EncoderError> {
    check_h(h, p)?;
    let n = h.nrows();
    check_square(a, n)?;
    check_square(alpha, n)?;
    let z = h.dot(&p.w_a);
    let u = aggregate(alpha, a, &z);
    let empty_rows = (0..n).filter(|&i| a.row(i).iter().all(|&v| v <= p.delta)).collect();
    Ok(TokenReps {
        e: layer_norm(&u, p).out,
        empty_rows,
    })
}

/// Everything the backward pass needs from one sentence's forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    h: Array2<f64>,
    pub adjacency: Array2<f64>,
    z: Array2<f64>,
    pub attention: Attention,
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
    pub token_reps: Array2<f64>,
    pub e_lig: Array1<f64>,
}

pub fn forward(h: ArrayView2<f64>, p: &GatParams) -> Result<Forward, EncoderError> {
    check_h(h, p)?;
    if h.nrows() == 0 {
        return Err(EncoderError::Shape("sentence has no tokens".into()));
    }
    let adjacency = adaptive_adjacency(h, p.w_lig.view())?;
    let z = h.dot(&p.w_a);
    let attention = attention_from_projection(&z, &adjacency, p);
    let u = aggregate(&attention.alpha, &adjacency, &z);
    let Normalized { out, xhat, inv_std } = layer_norm(&u, p);
    let e_lig = out.mean_axis(Axis(0)).expect("nonempty");
    Ok(Forward {
        h: h.to_owned(),
        adjacency,
        z,
        attention,
        xhat,
        inv_std,
        token_reps: out,
        e_lig,
    })
}

impl Forward {
    pub fn empty_rows(&self) -> &[usize] {
        &self.attention.empty_rows
    }

    /// Gradient of the loss with respect to every learnable parameter, given
    /// `d_elig = ∂loss/∂e_lig`. The δ mask is treated as constant.
    pub fn backward(&self, p: &GatParams, d_elig: &Array1<f64>) -> GatGrads {
        let (n, da) = self.z.dim();
        let a = &self.adjacency;
        let alpha = &self.attention.alpha;
        let mut g = GatGrads::zeros(p.in_dim(), da);

        // mean pooling
        let d_e = Array2::from_shape_fn((n, da), |(_, k)| d_elig[k] / n as f64);

        // layer norm
        g.ln_bias = d_e.sum_axis(Axis(0));
        g.ln_gain = (&d_e * &self.xhat).sum_axis(Axis(0));
        let dxhat = &d_e * &p.ln_gain;
        let mut du = Array2::zeros((n, da));
        for i in 0..n {
            let dx = dxhat.row(i);
            let xh = self.xhat.row(i);
            let mean_dx = dx.sum() / da as f64;
            let mean_dx_xh = dx.dot(&xh) / da as f64;
            for k in 0..da {
                du[[i, k]] = self.inv_std[i] * (dx[k] - mean_dx - xh[k] * mean_dx_xh);
            }
        }

        // U = (alpha ⊙ A) Z
        let weight = alpha * a;
        let mut dz = weight.t().dot(&du);
        let du_z = du.dot(&self.z.t()); // [i, j] = dU_i · Z_j
        let d_alpha = &du_z * a;
        let mut d_a = &du_z * alpha;

        // masked softmax then LeakyReLU
        let mut d_logit = Array2::zeros((n, n));
        for i in 0..n {
            let s: f64 = (0..n).map(|j| alpha[[i, j]] * d_alpha[[i, j]]).sum();
            for j in 0..n {
                if a[[i, j]] > p.delta {
                    let d_pre = alpha[[i, j]] * (d_alpha[[i, j]] - s);
                    d_logit[[i, j]] = d_pre * leaky_grad(self.attention.logits[[i, j]], p.leaky_slope);
                }
            }
        }
        let d_src = d_logit.sum_axis(Axis(1));
        let d_dst = d_logit.sum_axis(Axis(0));
        let a_src = p.a_vec.slice(ndarray::s![..da]);
        let a_dst = p.a_vec.slice(ndarray::s![da..]);
        let g_src = self.z.t().dot(&d_src);
        let g_dst = self.z.t().dot(&d_dst);
        for k in 0..da {
            g.a_vec[k] = g_src[k];
            g.a_vec[da + k] = g_dst[k];
        }
        for i in 0..n {
            for k in 0..da {
                dz[[i, k]] += d_src[i] * a_src[k] + d_dst[i] * a_dst[k];
            }
        }

        // Z = H W_a
        g.w_a = self.h.t().dot(&dz);

        // A = σ(S), S = H W_lig Hᵀ
        d_a.zip_mut_with(a, |g, &av| *g *= av * (1.0 - av));
        g.w_lig = self.h.t().dot(&d_a).dot(&self.h);
        g
    }
}

/// Sentence vector: column mean of the token representations.
pub fn encode_sentence(emb: &TokenEmbeddings, p: &GatParams) -> Result<SentenceRep, EncoderError> {
    let f = forward(emb.vectors.view(), p)?;
    Ok(SentenceRep {
        sentence_id: emb.sentence_id.clone(),
        e_lig: f.e_lig.to_vec(),
    })
}
