//! Linear classifier trained by per-example SGD on an L2-regularised hinge
//! or logistic loss.
//!
//! The objective is `λ/2·‖w‖² + mean_i loss(y_i·(w·x_i + b))` with
//! `y ∈ {−1, +1}`; the bias is not regularised. Dense features are
//! z-standardised with statistics fitted on the training rows; the sparse
//! block is used as is.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::metrics::{evaluate_labels, Metrics};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, GroupSlot, Row};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Hinge,
    Logistic,
}

impl Loss {
    pub fn value(self, margin: f64) -> f64 {
        match self {
            Loss::Hinge => (1.0 - margin).max(0.0),
            // ln(1 + e^-m), stable on both sides
            Loss::Logistic => {
                if margin > 0.0 {
                    (-margin).exp().ln_1p()
                } else {
                    -margin + margin.exp().ln_1p()
                }
            }
        }
    }

    /// d loss / d margin.
    pub fn derivative(self, margin: f64) -> f64 {
        match self {
            Loss::Hinge => {
                if margin < 1.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Loss::Logistic => -sigmoid(-margin),
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn default_loss() -> Loss {
    Loss::Hinge
}
fn default_lambda() -> f64 {
    1e-4
}
fn default_epochs() -> usize {
    20
}
fn default_eta0() -> f64 {
    0.01
}
fn default_seed() -> u64 {
    42
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_loss")]
    pub loss: Loss,
    #[serde(default = "default_lambda")]
    pub l2_lambda: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    /// Initial step size; the step at update `t` is `eta0 / (1 + eta0·λ·t)`.
    #[serde(default = "default_eta0")]
    pub eta0: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss: default_loss(),
            l2_lambda: default_lambda(),
            epochs: default_epochs(),
            eta0: default_eta0(),
            seed: default_seed(),
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return Err(Error::Config("l2_lambda must be finite and non-negative".into()));
        }
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return Err(Error::Config("eta0 must be positive".into()));
        }
        Ok(())
    }

    pub fn step(&self, t: u64) -> f64 {
        self.eta0 / (1.0 + self.eta0 * self.l2_lambda * t as f64)
    }
}

/// Per-feature `(mean, std)` of the dense block. Constant features have
/// `std = 0`, are mapped to 0 and keep a zero weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

const CONSTANT_STD: f64 = 1e-12;

impl Standardization {
    pub fn fit(rows: &[Vec<f64>], dim: usize) -> Self {
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(r).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > CONSTANT_STD {
                    s
                } else {
                    0.0
                }
            })
            .collect();
        Standardization { mean, std }
    }

    pub fn is_constant(&self, j: usize) -> bool {
        self.std[j] == 0.0
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| if *s == 0.0 { 0.0 } else { (v - m) / s })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// Dense weights (on standardised inputs) followed by sparse weights.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub n_dense: usize,
    pub standardization: Standardization,
    pub layout: Vec<GroupSlot>,
    pub dense_names: Vec<String>,
    pub loss: Loss,
    pub config_hash: String,
}

/// Hex SHA-256 of the JSON form of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serialises");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn labels_to_sign(y: &[Label]) -> Vec<f64> {
    y.iter().map(|l| l.sign()).collect()
}

fn check_inputs(x: &FeatureMatrix, y: &[Label]) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::Usage(format!("{} rows but {} labels", x.n_rows(), y.len())));
    }
    if y.len() < 2 {
        return Err(Error::Training("need at least two training examples".into()));
    }
    let pos = y.iter().filter(|l| l.is_positive()).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::Training("training labels contain a single class".into()));
    }
    Ok(())
}

/// Standardised dense block of every row.
fn standardized_rows(x: &FeatureMatrix, s: &Standardization) -> Vec<Vec<f64>> {
    x.dense.iter().map(|r| s.apply(r)).collect()
}

pub fn train(x: &FeatureMatrix, y: &[Label], cfg: &TrainConfig) -> Result<LinearModel> {
    cfg.validate()?;
    check_inputs(x, y)?;
    let std = Standardization::fit(&x.dense, x.n_dense);
    let dense = standardized_rows(x, &std);
    let ys = labels_to_sign(y);
    let nd = x.n_dense;
    let dim = x.dim();

    // w = scale · v; shrinking by (1 - ηλ) only touches `scale`.
    let mut v = vec![0.0; dim];
    let mut scale = 1.0f64;
    let mut bias = 0.0;
    let mut order: Vec<usize> = (0..x.n_rows()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut t: u64 = 0;
    for epoch in 0..cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for &i in &order {
            let eta = cfg.step(t);
            t += 1;
            let d = &dense[i];
            let sp = &x.sparse[i];
            let mut dot = 0.0;
            for j in 0..nd {
                dot += v[j] * d[j];
            }
            for &(j, val) in sp {
                dot += v[nd + j as usize] * val;
            }
            let score = scale * dot + bias;
            let margin = ys[i] * score;
            total += cfg.loss.value(margin);
            let g = cfg.loss.derivative(margin) * ys[i];

            let shrink = (1.0 - eta * cfg.l2_lambda).max(0.0);
            if shrink == 0.0 {
                v.iter_mut().for_each(|w| *w = 0.0);
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if g != 0.0 {
                let step = eta * g / scale;
                for j in 0..nd {
                    v[j] -= step * d[j];
                }
                for &(j, val) in sp {
                    v[nd + j as usize] -= step * val;
                }
                bias -= eta * g;
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
        }
        log::debug!("epoch {}: mean loss {:.6}", epoch + 1, total / order.len() as f64);
    }
    let mut weights: Vec<f64> = v.into_iter().map(|w| w * scale).collect();
    for (j, w) in weights.iter_mut().take(nd).enumerate() {
        if std.is_constant(j) {
            *w = 0.0;
        }
    }
    if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
        return Err(Error::Training("SGD diverged to non-finite weights".into()));
    }
    Ok(LinearModel {
        weights,
        bias,
        n_dense: nd,
        standardization: std,
        layout: x.layout.clone(),
        dense_names: x.dense_names.clone(),
        loss: cfg.loss,
        config_hash: config_hash(&(cfg, &x.layout)),
    })
}

impl LinearModel {
    pub fn decision_score(&self, row: Row<'_>) -> f64 {
        let mut s = self.bias;
        for (j, x) in row.dense.iter().enumerate() {
            let sd = self.standardization.std[j];
            if sd != 0.0 {
                s += self.weights[j] * (x - self.standardization.mean[j]) / sd;
            }
        }
        for &(j, x) in row.sparse {
            s += self.weights[self.n_dense + j as usize] * x;
        }
        s
    }

    /// `score > 0` is constructive; an exact zero is not.
    pub fn predict(&self, row: Row<'_>) -> Label {
        label_for_score(self.decision_score(row))
    }

    pub fn scores(&self, x: &FeatureMatrix) -> Vec<f64> {
        (0..x.n_rows()).map(|i| self.decision_score(x.row(i))).collect()
    }

    pub fn predict_all(&self, x: &FeatureMatrix) -> Vec<Label> {
        self.scores(x).into_iter().map(label_for_score).collect()
    }

    pub fn evaluate(&self, x: &FeatureMatrix, y: &[Label]) -> Result<Metrics> {
        evaluate_labels(y, &self.predict_all(x))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn label_for_score(score: f64) -> Label {
    if score > 0.0 {
        Label::Constructive
    } else {
        Label::NonConstructive
    }
}

/// Full objective at `(w, b)` over already standardised dense rows and
/// sparse rows. `w` holds dense then sparse weights.
pub fn objective(
    w: &[f64],
    b: f64,
    dense: &[Vec<f64>],
    sparse: &[Vec<(u32, f64)>],
    y: &[Label],
    loss: Loss,
    lambda: f64,
) -> f64 {
    let nd = dense.first().map_or(0, Vec::len);
    let n = y.len() as f64;
    let mut total = 0.0;
    for i in 0..y.len() {
        let s = raw_score(w, b, &dense[i], &sparse[i], nd);
        total += loss.value(y[i].sign() * s);
    }
    0.5 * lambda * w.iter().map(|x| x * x).sum::<f64>() + total / n
}

/// Analytic gradient of [`objective`]: `(∂/∂w, ∂/∂b)`.
pub fn objective_gradient(
    w: &[f64],
    b: f64,
    dense: &[Vec<f64>],
    sparse: &[Vec<(u32, f64)>],
    y: &[Label],
    loss: Loss,
    lambda: f64,
) -> (Vec<f64>, f64) {
    let nd = dense.first().map_or(0, Vec::len);
    let n = y.len() as f64;
    let mut gw: Vec<f64> = w.iter().map(|x| lambda * x).collect();
    let mut gb = 0.0;
    for i in 0..y.len() {
        let yi = y[i].sign();
        let s = raw_score(w, b, &dense[i], &sparse[i], nd);
        let g = loss.derivative(yi * s) * yi / n;
        for (j, x) in dense[i].iter().enumerate() {
            gw[j] += g * x;
        }
        for &(j, x) in &sparse[i] {
            gw[nd + j as usize] += g * x;
        }
        gb += g;
    }
    (gw, gb)
}

fn raw_score(w: &[f64], b: f64, dense: &[f64], sparse: &[(u32, f64)], nd: usize) -> f64 {
    let mut s = b;
    for (j, x) in dense.iter().enumerate() {
        s += w[j] * x;
    }
    for &(j, x) in sparse {
        s += w[nd + j as usize] * x;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::*;

    fn toy() -> (FeatureMatrix, Vec<Label>) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..40 {
            let a = (i as f64 - 19.5) / 10.0;
            let b = ((i * 7) % 11) as f64;
            rows.push(vec![a, b]);
            y.push(if a > 0.0 { Constructive } else { NonConstructive });
        }
        (FeatureMatrix::from_dense(rows), y)
    }

    #[test]
    fn separable_toy_is_learned() {
        let (x, y) = toy();
        let m = train(&x, &y, &TrainConfig::default()).unwrap();
        assert_eq!(m.evaluate(&x, &y).unwrap().f1, 1.0);
    }

    #[test]
    fn deterministic() {
        let (x, y) = toy();
        let a = train(&x, &y, &TrainConfig::default()).unwrap();
        let b = train(&x, &y, &TrainConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn huge_lambda_collapses() {
        let (x, y) = toy();
        let cfg = TrainConfig {
            l2_lambda: 1e6,
            ..TrainConfig::default()
        };
        let m = train(&x, &y, &cfg).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-6));
        let p = m.predict_all(&x);
        assert!(p.iter().all(|l| *l == p[0]));
    }

    #[test]
    fn zero_vector_scores_bias_after_standardization() {
        let (x, y) = toy();
        let m = train(&x, &y, &TrainConfig::default()).unwrap();
        let mean = m.standardization.mean.clone();
        let s = m.decision_score(Row { dense: &mean, sparse: &[] });
        assert_eq!(s, m.bias);
        assert_eq!(label_for_score(0.0), NonConstructive);
    }

    #[test]
    fn single_class_rejected() {
        let x = FeatureMatrix::from_dense(vec![vec![1.0], vec![2.0]]);
        assert!(matches!(
            train(&x, &[Constructive, Constructive], &TrainConfig::default()),
            Err(Error::Training(_))
        ));
    }

    #[test]
    fn constant_feature_weight_is_zero() {
        let (mut x, y) = toy();
        for r in &mut x.dense {
            r.push(3.0);
        }
        x.n_dense = 3;
        let m = train(&x, &y, &TrainConfig::default()).unwrap();
        assert_eq!(m.weights[2], 0.0);
    }

    #[test]
    fn json_round_trip() {
        let (x, y) = toy();
        let m = train(&x, &y, &TrainConfig::default()).unwrap();
        assert_eq!(LinearModel::from_json(&m.to_json().unwrap()).unwrap(), m);
    }

    #[test]
    fn logistic_loss_is_stable() {
        assert!((Loss::Logistic.value(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!(Loss::Logistic.value(-800.0).is_finite());
        assert_eq!(Loss::Logistic.value(800.0), 0.0);
    }
}
