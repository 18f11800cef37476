//! Parameters, forward pass and hand-derived backward pass.
//!
//! All parameters live in one flat vector. For each width `w` in
//! [`WIDTHS`] it holds `F` filters of `w·D` weights then `F` biases; the
//! fully connected layer follows as a `2 × 3F` row-major matrix and two
//! biases. Logit 1 belongs to the constructive class.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const WIDTHS: [usize; 3] = [3, 4, 5];
pub const CLASSES: usize = 2;
/// Inputs shorter than this are padded with zero vectors.
pub const MIN_LEN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnnShape {
    pub dim: usize,
    pub filters: usize,
}

impl CnnShape {
    pub fn pooled(&self) -> usize {
        WIDTHS.len() * self.filters
    }

    /// Offset of the filter bank for width index `k`.
    pub fn conv_offset(&self, k: usize) -> usize {
        WIDTHS[..k].iter().map(|w| self.filters * (w * self.dim + 1)).sum()
    }

    pub fn conv_bias_offset(&self, k: usize) -> usize {
        self.conv_offset(k) + self.filters * WIDTHS[k] * self.dim
    }

    pub fn fc_offset(&self) -> usize {
        self.conv_offset(WIDTHS.len())
    }

    pub fn fc_bias_offset(&self) -> usize {
        self.fc_offset() + CLASSES * self.pooled()
    }

    pub fn n_params(&self) -> usize {
        self.fc_bias_offset() + CLASSES
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnParams {
    pub shape: CnnShape,
    pub theta: Vec<f64>,
}

impl CnnParams {
    pub fn zeros(shape: CnnShape) -> Self {
        CnnParams {
            shape,
            theta: vec![0.0; shape.n_params()],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(shape: CnnShape, seed: u64) -> Self {
        let mut p = Self::zeros(shape);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (k, &w) in WIDTHS.iter().enumerate() {
            let fan_in = w * shape.dim;
            let a = (6.0 / (fan_in + shape.filters) as f64).sqrt();
            let o = shape.conv_offset(k);
            for x in &mut p.theta[o..o + shape.filters * fan_in] {
                *x = rng.random_range(-a..a);
            }
        }
        let a = (6.0 / (shape.pooled() + CLASSES) as f64).sqrt();
        let o = shape.fc_offset();
        for x in &mut p.theta[o..o + CLASSES * shape.pooled()] {
            *x = rng.random_range(-a..a);
        }
        p
    }

    pub fn filter(&self, k: usize, f: usize) -> &[f64] {
        let n = WIDTHS[k] * self.shape.dim;
        let o = self.shape.conv_offset(k) + f * n;
        &self.theta[o..o + n]
    }

    pub fn conv_bias(&self, k: usize) -> &[f64] {
        let o = self.shape.conv_bias_offset(k);
        &self.theta[o..o + self.shape.filters]
    }

    pub fn fc_weights(&self) -> &[f64] {
        let o = self.shape.fc_offset();
        &self.theta[o..o + CLASSES * self.shape.pooled()]
    }

    pub fn fc_bias(&self) -> &[f64] {
        &self.theta[self.shape.fc_bias_offset()..]
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().all(|x| x.is_finite())
    }
}

/// Row-major `L × D` input, `L ≥ MIN_LEN`.
#[derive(Debug, Clone, PartialEq)]
pub struct Input {
    pub data: Vec<f64>,
    pub len: usize,
}

impl Input {
    /// Stack rows, padding with zero rows up to [`MIN_LEN`].
    pub fn from_rows<'a>(rows: impl IntoIterator<Item = &'a [f64]>, dim: usize) -> Self {
        let mut data = Vec::new();
        let mut len = 0;
        for r in rows {
            debug_assert_eq!(r.len(), dim);
            data.extend_from_slice(r);
            len += 1;
        }
        while len < MIN_LEN {
            data.extend(std::iter::repeat_n(0.0, dim));
            len += 1;
        }
        Input { data, len }
    }

    pub fn window(&self, start: usize, width: usize, dim: usize) -> &[f64] {
        &self.data[start * dim..(start + width) * dim]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    /// Max-pooled rectified responses, `3F`.
    pub pooled: Vec<f64>,
    /// First position attaining each filter's maximum pre-activation.
    pub argmax: Vec<usize>,
    /// Pooled vector after dropout (equal to `pooled` in eval mode).
    pub hidden: Vec<f64>,
    pub logits: [f64; CLASSES],
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `mask` holds the inverted-dropout multipliers (0 or `1/(1−p)`); `None`
/// is eval mode.
pub fn forward(p: &CnnParams, x: &Input, mask: Option<&[f64]>) -> Forward {
    let s = p.shape;
    let mut pooled = vec![0.0; s.pooled()];
    let mut argmax = vec![0; s.pooled()];
    for (k, &w) in WIDTHS.iter().enumerate() {
        let positions = x.len + 1 - w;
        let bias = p.conv_bias(k);
        for f in 0..s.filters {
            let filt = p.filter(k, f);
            let mut best = f64::NEG_INFINITY;
            let mut at = 0;
            for pos in 0..positions {
                let v = dot(filt, x.window(pos, w, s.dim));
                if v > best {
                    best = v;
                    at = pos;
                }
            }
            let j = k * s.filters + f;
            pooled[j] = (best + bias[f]).max(0.0);
            argmax[j] = at;
        }
    }
    let hidden: Vec<f64> = match mask {
        Some(m) => pooled.iter().zip(m).map(|(h, m)| h * m).collect(),
        None => pooled.clone(),
    };
    let fc = p.fc_weights();
    let fb = p.fc_bias();
    let mut logits = [0.0; CLASSES];
    for (c, l) in logits.iter_mut().enumerate() {
        *l = fb[c] + dot(&fc[c * s.pooled()..(c + 1) * s.pooled()], &hidden);
    }
    Forward {
        pooled,
        argmax,
        hidden,
        logits,
    }
}

pub fn softmax(logits: &[f64; CLASSES]) -> [f64; CLASSES] {
    let m = logits[0].max(logits[1]);
    let e = [(logits[0] - m).exp(), (logits[1] - m).exp()];
    let z = e[0] + e[1];
    [e[0] / z, e[1] / z]
}

/// `−ln softmax(logits)[target]`, computed stably.
pub fn cross_entropy(logits: &[f64; CLASSES], target: usize) -> f64 {
    let m = logits[0].max(logits[1]);
    let lse = m + ((logits[0] - m).exp() + (logits[1] - m).exp()).ln();
    lse - logits[target]
}

/// Accumulate `∂(weight · loss)/∂θ` into `grad` and, when `d_input` is
/// given, `∂/∂input` into it. `dlogits` is already scaled by the weight.
pub fn backward(
    p: &CnnParams,
    x: &Input,
    fwd: &Forward,
    mask: Option<&[f64]>,
    dlogits: &[f64; CLASSES],
    grad: &mut [f64],
    mut d_input: Option<&mut [f64]>,
) {
    let s = p.shape;
    let np = s.pooled();
    let fco = s.fc_offset();
    let fc = p.fc_weights();
    let mut dh = vec![0.0; np];
    for c in 0..CLASSES {
        let g = dlogits[c];
        grad[s.fc_bias_offset() + c] += g;
        let row = fco + c * np;
        for j in 0..np {
            grad[row + j] += g * fwd.hidden[j];
            dh[j] += g * fc[c * np + j];
        }
    }
    if let Some(m) = mask {
        for (d, m) in dh.iter_mut().zip(m) {
            *d *= m;
        }
    }
    for (k, &w) in WIDTHS.iter().enumerate() {
        let span = w * s.dim;
        for f in 0..s.filters {
            let j = k * s.filters + f;
            // rectifier passes gradient only where the pooled response is positive
            if fwd.pooled[j] <= 0.0 || dh[j] == 0.0 {
                continue;
            }
            let g = dh[j];
            let pos = fwd.argmax[j];
            let win = x.window(pos, w, s.dim);
            let o = s.conv_offset(k) + f * span;
            for (gw, xv) in grad[o..o + span].iter_mut().zip(win) {
                *gw += g * xv;
            }
            grad[s.conv_bias_offset(k) + f] += g;
            if let Some(di) = d_input.as_deref_mut() {
                let filt = p.filter(k, f);
                for (d, wv) in di[pos * s.dim..pos * s.dim + span].iter_mut().zip(filt) {
                    *d += g * wv;
                }
            }
        }
    }
}

/// Mean cross-entropy over `batch` and its gradient. `masks[i]` is the
/// dropout mask of example `i` (or `None` for eval mode).
pub fn loss_and_gradients(
    p: &CnnParams,
    batch: &[(&Input, usize)],
    masks: &[Option<Vec<f64>>],
) -> (f64, Vec<f64>) {
    let n = batch.len() as f64;
    let mut grad = vec![0.0; p.theta.len()];
    let mut loss = 0.0;
    for ((x, y), m) in batch.iter().zip(masks) {
        let fwd = forward(p, x, m.as_deref());
        loss += cross_entropy(&fwd.logits, *y);
        let pr = softmax(&fwd.logits);
        let mut dl = [pr[0] / n, pr[1] / n];
        dl[*y] -= 1.0 / n;
        backward(p, x, &fwd, m.as_deref(), &dl, &mut grad, None);
    }
    (loss / n, grad)
}

/// Inverted-dropout multipliers for one example.
pub fn dropout_mask<R: Rng>(rng: &mut R, n: usize, rate: f64) -> Vec<f64> {
    let keep = 1.0 / (1.0 - rate);
    (0..n)
        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
        .collect()
}
