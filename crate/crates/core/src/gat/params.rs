use std::io::{self, Read, Write};

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ContrastiveForm, EncoderError};
use crate::binio::{len_u32, read_f64, read_magic, read_u32, write_f64, write_magic, write_u32};

pub const MODEL_MAGIC: &[u8; 4] = b"GAT1";

/// Architecture and loss settings that are not learned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    /// Width `d_a` of the attention projection and of the sentence vector.
    pub out_dim: usize,
    /// Adjacency threshold δ in `[0, 1)`.
    pub delta: f64,
    /// Contrastive temperature τ.
    pub tau: f64,
    pub leaky_slope: f64,
    pub form: ContrastiveForm,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            out_dim: 32,
            delta: 0.5,
            tau: 0.1,
            leaky_slope: 0.01,
            form: ContrastiveForm::Literal,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<(), EncoderError> {
        if self.out_dim == 0 {
            return Err(EncoderError::InvalidParam("out_dim must be positive".into()));
        }
        check_scalars(self.delta, self.tau, self.leaky_slope)
    }
}

fn check_scalars(delta: f64, tau: f64, slope: f64) -> Result<(), EncoderError> {
    if !(0.0..1.0).contains(&delta) {
        return Err(EncoderError::InvalidParam(format!("delta must lie in [0, 1), got {delta}")));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(EncoderError::InvalidParam(format!("tau must be positive, got {tau}")));
    }
    if !slope.is_finite() {
        return Err(EncoderError::InvalidParam(format!("leaky slope must be finite, got {slope}")));
    }
    Ok(())
}

/// Encoder weights. Learnable blocks come first, in the fixed order used by
/// [`GatParams::to_flat`] and the `GAT1` file: `w_lig` (d×d), `w_a` (d×d_a),
/// `a_vec` (2·d_a), `ln_gain` (d_a), `ln_bias` (d_a).
#[derive(Debug, Clone, PartialEq)]
pub struct GatParams {
    pub w_lig: Array2<f64>,
    pub w_a: Array2<f64>,
    pub a_vec: Array1<f64>,
    pub ln_gain: Array1<f64>,
    pub ln_bias: Array1<f64>,
    pub delta: f64,
    pub tau: f64,
    pub leaky_slope: f64,
}

impl GatParams {
    /// Every learnable entry drawn from `U[-init_scale, init_scale]`.
    pub fn init<R: Rng>(in_dim: usize, config: &EncoderConfig, init_scale: f64, rng: &mut R) -> Self {
        let da = config.out_dim;
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-init_scale..=init_scale)).collect() };
        let w_lig = Array2::from_shape_vec((in_dim, in_dim), draw(in_dim * in_dim)).expect("shape");
        let w_a = Array2::from_shape_vec((in_dim, da), draw(in_dim * da)).expect("shape");
        let a_vec = Array1::from(draw(2 * da));
        let ln_gain = Array1::from(draw(da));
        let ln_bias = Array1::from(draw(da));
        Self {
            w_lig,
            w_a,
            a_vec,
            ln_gain,
            ln_bias,
            delta: config.delta,
            tau: config.tau,
            leaky_slope: config.leaky_slope,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w_lig.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.w_a.ncols()
    }

    pub fn num_learnable(&self) -> usize {
        let (d, da) = (self.in_dim(), self.out_dim());
        d * d + d * da + 4 * da
    }

    pub fn validate(&self) -> Result<(), EncoderError> {
        let (d, da) = (self.in_dim(), self.out_dim());
        if self.w_lig.ncols() != d || self.w_a.nrows() != d || self.a_vec.len() != 2 * da || self.ln_gain.len() != da || self.ln_bias.len() != da {
            return Err(EncoderError::Shape("inconsistent parameter blocks".into()));
        }
        if !self.to_flat().iter().all(|v| v.is_finite()) {
            return Err(EncoderError::InvalidParam("non-finite weight".into()));
        }
        check_scalars(self.delta, self.tau, self.leaky_slope)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_learnable());
        v.extend(self.w_lig.iter());
        v.extend(self.w_a.iter());
        v.extend(self.a_vec.iter());
        v.extend(self.ln_gain.iter());
        v.extend(self.ln_bias.iter());
        v
    }

    /// Copy of `self` with learnable entries replaced from `flat`.
    pub fn with_flat(&self, flat: &[f64]) -> Self {
        assert_eq!(flat.len(), self.num_learnable(), "flat parameter length");
        let (d, da) = (self.in_dim(), self.out_dim());
        let mut off = 0;
        let mut take = |n: usize| {
            let s = flat[off..off + n].to_vec();
            off += n;
            s
        };
        Self {
            w_lig: Array2::from_shape_vec((d, d), take(d * d)).expect("shape"),
            w_a: Array2::from_shape_vec((d, da), take(d * da)).expect("shape"),
            a_vec: Array1::from(take(2 * da)),
            ln_gain: Array1::from(take(da)),
            ln_bias: Array1::from(take(da)),
            delta: self.delta,
            tau: self.tau,
            leaky_slope: self.leaky_slope,
        }
    }

    /// `self -= lr * grads`.
    pub fn apply_gradient(&mut self, grads: &GatGrads, lr: f64) {
        self.w_lig.scaled_add(-lr, &grads.w_lig);
        self.w_a.scaled_add(-lr, &grads.w_a);
        self.a_vec.scaled_add(-lr, &grads.a_vec);
        self.ln_gain.scaled_add(-lr, &grads.ln_gain);
        self.ln_bias.scaled_add(-lr, &grads.ln_bias);
    }
}

/// Gradient with the same block layout as [`GatParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct GatGrads {
    pub w_lig: Array2<f64>,
    pub w_a: Array2<f64>,
    pub a_vec: Array1<f64>,
    pub ln_gain: Array1<f64>,
    pub ln_bias: Array1<f64>,
}

impl GatGrads {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            w_lig: Array2::zeros((in_dim, in_dim)),
            w_a: Array2::zeros((in_dim, out_dim)),
            a_vec: Array1::zeros(2 * out_dim),
            ln_gain: Array1::zeros(out_dim),
            ln_bias: Array1::zeros(out_dim),
        }
    }

    pub fn add_assign(&mut self, other: &GatGrads) {
        self.w_lig += &other.w_lig;
        self.w_a += &other.w_a;
        self.a_vec += &other.a_vec;
        self.ln_gain += &other.ln_gain;
        self.ln_bias += &other.ln_bias;
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::new();
        v.extend(self.w_lig.iter());
        v.extend(self.w_a.iter());
        v.extend(self.a_vec.iter());
        v.extend(self.ln_gain.iter());
        v.extend(self.ln_bias.iter());
        v
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|v| v.is_finite())
    }
}

/// `GAT1`: magic, `u32` d, `u32` d_a, the learnable blocks in declaration
/// order as `f64`, then `delta`, `tau`, `leaky_slope` as `f64`. Little-endian.
pub fn write_params<W: Write>(w: &mut W, p: &GatParams) -> io::Result<()> {
    write_magic(w, MODEL_MAGIC)?;
    write_u32(w, len_u32(p.in_dim())?)?;
    write_u32(w, len_u32(p.out_dim())?)?;
    for v in p.to_flat() {
        write_f64(w, v)?;
    }
    write_f64(w, p.delta)?;
    write_f64(w, p.tau)?;
    write_f64(w, p.leaky_slope)
}

pub fn read_params<R: Read>(r: &mut R) -> io::Result<GatParams> {
    if !read_magic(r, MODEL_MAGIC)? {
        return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "empty GAT1 file"));
    }
    let d = read_u32(r)? as usize;
    let da = read_u32(r)? as usize;
    let n = d * d + d * da + 4 * da;
    let flat = (0..n).map(|_| read_f64(r)).collect::<io::Result<Vec<f64>>>()?;
    let delta = read_f64(r)?;
    let tau = read_f64(r)?;
    let leaky_slope = read_f64(r)?;
    let shell = GatParams {
        w_lig: Array2::zeros((d, d)),
        w_a: Array2::zeros((d, da)),
        a_vec: Array1::zeros(2 * da),
        ln_gain: Array1::zeros(da),
        ln_bias: Array1::zeros(da),
        delta,
        tau,
        leaky_slope,
    };
    let p = shell.with_flat(&flat);
    p.validate().map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn init_is_bounded_and_seeded() {
        let cfg = EncoderConfig { out_dim: 3, ..Default::default() };
        let a = GatParams::init(4, &cfg, 0.05, &mut ChaCha8Rng::seed_from_u64(7));
        let b = GatParams::init(4, &cfg, 0.05, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
        assert_eq!(a.num_learnable(), 16 + 12 + 12);
        assert!(a.to_flat().iter().all(|v| v.abs() <= 0.05));
    }

    #[test]
    fn flat_and_file_roundtrip() {
        let cfg = EncoderConfig { out_dim: 2, ..Default::default() };
        let p = GatParams::init(3, &cfg, 0.5, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(p.with_flat(&p.to_flat()), p);
        let mut buf = Vec::new();
        write_params(&mut buf, &p).unwrap();
        assert_eq!(&buf[..4], b"GAT1");
        assert_eq!(buf.len(), 4 + 8 + 8 * (p.num_learnable() + 3));
        assert_eq!(read_params(&mut buf.as_slice()).unwrap(), p);
    }

    #[test]
    fn scalar_validation() {
        assert!(EncoderConfig { tau: 0.0, ..Default::default() }.validate().is_err());
        assert!(EncoderConfig { delta: 1.0, ..Default::default() }.validate().is_err());
        assert!(EncoderConfig::default().validate().is_ok());
    }
}
