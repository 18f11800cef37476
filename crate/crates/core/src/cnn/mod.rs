//! Convolutional text classifier with hand-written gradients.
//!
//! Embeddings feed three banks of filters (widths 3, 4, 5), each followed by
//! a rectifier and global max-pooling; the concatenated pooled vector passes
//! through dropout and an affine layer to two logits trained with softmax
//! cross-entropy and Adam.

pub mod embeddings;
pub mod net;

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Label, LabeledComment};
use crate::error::{Error, Result};
use crate::features::tokenize::tokenize;
use crate::linear::metrics::{evaluate_labels, Metrics};
pub use embeddings::{load_embeddings, Coverage, EmbeddingTable};
pub use net::{CnnParams, CnnShape, Input};

/// Checkpoint format version.
pub const CHECKPOINT_VERSION: u32 = 1;

fn d_filters() -> usize {
    128
}
fn d_dropout() -> f64 {
    0.5
}
fn d_lr() -> f64 {
    0.001
}
fn d_beta1() -> f64 {
    0.9
}
fn d_beta2() -> f64 {
    0.999
}
fn d_eps() -> f64 {
    1e-8
}
fn d_batch() -> usize {
    32
}
fn d_epochs() -> usize {
    10
}
fn d_max_len() -> usize {
    400
}
fn d_seed() -> u64 {
    42
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CnnTrainConfig {
    #[serde(default = "d_filters")]
    pub filters_per_width: usize,
    #[serde(default = "d_dropout")]
    pub dropout: f64,
    #[serde(default = "d_lr")]
    pub learning_rate: f64,
    #[serde(default = "d_beta1")]
    pub beta1: f64,
    #[serde(default = "d_beta2")]
    pub beta2: f64,
    #[serde(default = "d_eps")]
    pub epsilon: f64,
    #[serde(default = "d_batch")]
    pub batch_size: usize,
    #[serde(default = "d_epochs")]
    pub epochs: usize,
    /// Longer comments are truncated to this many tokens.
    #[serde(default = "d_max_len")]
    pub max_len: usize,
    #[serde(default = "d_seed")]
    pub seed: u64,
    /// Update embedding rows during training.
    #[serde(default)]
    pub fine_tune_embeddings: bool,
}

impl Default for CnnTrainConfig {
    fn default() -> Self {
        CnnTrainConfig {
            filters_per_width: d_filters(),
            dropout: d_dropout(),
            learning_rate: d_lr(),
            beta1: d_beta1(),
            beta2: d_beta2(),
            epsilon: d_eps(),
            batch_size: d_batch(),
            epochs: d_epochs(),
            max_len: d_max_len(),
            seed: d_seed(),
            fine_tune_embeddings: false,
        }
    }
}

impl CnnTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("dropout must be in [0, 1)".into()));
        }
        if self.filters_per_width == 0 || self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Config("filters_per_width, batch_size and epochs must be positive".into()));
        }
        if self.max_len < net::MIN_LEN {
            return Err(Error::Config(format!("max_len must be at least {}", net::MIN_LEN)));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Adam state over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
    b1: f64,
    b2: f64,
    eps: f64,
}

impl Adam {
    pub fn new(n: usize, cfg: &CnnTrainConfig) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr: cfg.learning_rate,
            b1: cfg.beta1,
            b2: cfg.beta2,
            eps: cfg.epsilon,
        }
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.b1.powi(self.t);
        let c2 = 1.0 - self.b2.powi(self.t);
        for i in 0..theta.len() {
            self.m[i] = self.b1 * self.m[i] + (1.0 - self.b1) * grad[i];
            self.v[i] = self.b2 * self.v[i] + (1.0 - self.b2) * grad[i] * grad[i];
            theta[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}

/// Sparse Adam for embedding rows: only rows with a gradient in the batch
/// are touched, each keeping its own step count.
#[derive(Debug, Clone, Default)]
struct RowAdam {
    state: BTreeMap<u32, (Vec<f64>, Vec<f64>, i32)>,
}

impl RowAdam {
    fn step(&mut self, table: &mut EmbeddingTable, grads: &BTreeMap<u32, Vec<f64>>, cfg: &CnnTrainConfig) {
        let dim = table.dim();
        for (&row, g) in grads {
            let (m, v, t) = self
                .state
                .entry(row)
                .or_insert_with(|| (vec![0.0; dim], vec![0.0; dim], 0));
            *t += 1;
            let c1 = 1.0 - cfg.beta1.powi(*t);
            let c2 = 1.0 - cfg.beta2.powi(*t);
            let r = table.row_mut(row);
            for i in 0..dim {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                r[i] -= cfg.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + cfg.epsilon);
            }
        }
    }
}

/// Trained network together with the embedding rows it reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnModel {
    pub params: CnnParams,
    pub embeddings: EmbeddingTable,
    pub config: CnnTrainConfig,
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    shape: CnnShape,
    n_params: usize,
    vocab_size: usize,
    model: CnnModel,
}

/// Per-epoch training log entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_accuracy: f64,
}

/// Token ids of a comment, truncated to `max_len`. The OOV id marks
/// unknown tokens.
pub fn token_ids(table: &EmbeddingTable, tokens: &[String], max_len: usize) -> Vec<u32> {
    tokens.iter().take(max_len).map(|t| table.index_of(t)).collect()
}

fn build_input(table: &EmbeddingTable, ids: &[u32]) -> Input {
    Input::from_rows(ids.iter().map(|&i| table.row(i)), table.dim())
}

fn class_of(l: Label) -> usize {
    usize::from(l.is_positive())
}

struct ExampleGrad {
    loss: f64,
    grad: Vec<f64>,
    d_input: Option<Vec<f64>>,
}

fn example_gradient(
    p: &CnnParams,
    x: &Input,
    y: usize,
    mask: &[f64],
    scale: f64,
    want_input: bool,
) -> ExampleGrad {
    let fwd = net::forward(p, x, Some(mask));
    let loss = net::cross_entropy(&fwd.logits, y);
    let pr = net::softmax(&fwd.logits);
    let mut dl = [pr[0] * scale, pr[1] * scale];
    dl[y] -= scale;
    let mut grad = vec![0.0; p.theta.len()];
    let mut d_input = want_input.then(|| vec![0.0; x.data.len()]);
    net::backward(p, x, &fwd, Some(mask), &dl, &mut grad, d_input.as_deref_mut());
    ExampleGrad { loss, grad, d_input }
}

impl CnnModel {
    /// Train on tokenised comments with labels.
    pub fn train(
        docs: &[Vec<String>],
        labels: &[Label],
        embeddings: EmbeddingTable,
        cfg: &CnnTrainConfig,
    ) -> Result<(Self, Vec<EpochLog>)> {
        cfg.validate()?;
        if docs.len() != labels.len() {
            return Err(Error::Usage(format!("{} documents but {} labels", docs.len(), labels.len())));
        }
        let pos = labels.iter().filter(|l| l.is_positive()).count();
        if pos == 0 || pos == labels.len() {
            return Err(Error::Training("CNN training labels contain a single class".into()));
        }
        let mut table = embeddings;
        let shape = CnnShape {
            dim: table.dim(),
            filters: cfg.filters_per_width,
        };
        let mut params = CnnParams::init(shape, cfg.seed);
        let ids: Vec<Vec<u32>> = docs.iter().map(|d| token_ids(&table, d, cfg.max_len)).collect();
        let ys: Vec<usize> = labels.iter().map(|&l| class_of(l)).collect();
        let mut inputs: Vec<Input> = ids.par_iter().map(|i| build_input(&table, i)).collect();

        let mut adam = Adam::new(params.theta.len(), cfg);
        let mut row_adam = RowAdam::default();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
        let mut order: Vec<usize> = (0..docs.len()).collect();
        let mut log = Vec::with_capacity(cfg.epochs);
        let oov = table.oov_index();
        for epoch in 1..=cfg.epochs {
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
                let masks: Vec<Vec<f64>> = batch
                    .iter()
                    .map(|_| net::dropout_mask(&mut rng, shape.pooled(), cfg.dropout))
                    .collect();
                let scale = 1.0 / batch.len() as f64;
                let parts: Vec<ExampleGrad> = batch
                    .par_iter()
                    .zip(masks.par_iter())
                    .map(|(&i, m)| example_gradient(&params, &inputs[i], ys[i], m, scale, cfg.fine_tune_embeddings))
                    .collect();
                let mut grad = vec![0.0; params.theta.len()];
                let mut loss = 0.0;
                let mut emb_grads: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
                for (&i, part) in batch.iter().zip(&parts) {
                    loss += part.loss;
                    for (g, p) in grad.iter_mut().zip(&part.grad) {
                        *g += p;
                    }
                    if let Some(di) = &part.d_input {
                        for (pos, &tok) in ids[i].iter().enumerate() {
                            if tok == oov {
                                continue;
                            }
                            let src = &di[pos * shape.dim..(pos + 1) * shape.dim];
                            if src.iter().all(|v| *v == 0.0) {
                                continue;
                            }
                            let e = emb_grads.entry(tok).or_insert_with(|| vec![0.0; shape.dim]);
                            for (a, s) in e.iter_mut().zip(src) {
                                *a += s;
                            }
                        }
                    }
                }
                let mean = loss / batch.len() as f64;
                if !mean.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                    return Err(Error::Training(format!(
                        "non-finite loss at epoch {epoch}, batch {b}: loss {mean}, max |theta| {:.3e}",
                        params.theta.iter().fold(0.0f64, |a, v| a.max(v.abs()))
                    )));
                }
                total += loss;
                adam.step(&mut params.theta, &grad);
                if !emb_grads.is_empty() {
                    row_adam.step(&mut table, &emb_grads, cfg);
                    for &i in batch {
                        if ids[i].iter().any(|t| emb_grads.contains_key(t)) {
                            inputs[i] = build_input(&table, &ids[i]);
                        }
                    }
                }
            }
            let model = CnnModel {
                params: params.clone(),
                embeddings: table.clone(),
                config: cfg.clone(),
            };
            let preds = model.predict_inputs(&inputs);
            let acc = preds.iter().zip(&ys).filter(|(p, y)| class_of(**p) == **y).count() as f64 / ys.len() as f64;
            let entry = EpochLog {
                epoch,
                mean_loss: total / docs.len() as f64,
                train_accuracy: acc,
            };
            log::info!("cnn epoch {epoch}: loss {:.4}, train accuracy {:.4}", entry.mean_loss, acc);
            log.push(entry);
        }
        Ok((
            CnnModel {
                params,
                embeddings: table,
                config: cfg.clone(),
            },
            log,
        ))
    }

    /// Train on labelled comments, tokenising with the shared tokenizer.
    pub fn train_comments(
        comments: &[LabeledComment],
        embeddings: EmbeddingTable,
        cfg: &CnnTrainConfig,
    ) -> Result<(Self, Vec<EpochLog>)> {
        let docs: Vec<Vec<String>> = comments.par_iter().map(|c| tokenize(c.text()).word_tokens).collect();
        let labels: Vec<Label> = comments.iter().map(|c| c.label).collect();
        Self::train(&docs, &labels, embeddings, cfg)
    }

    pub fn input_for(&self, tokens: &[String]) -> Input {
        build_input(&self.embeddings, &token_ids(&self.embeddings, tokens, self.config.max_len))
    }

    /// Probability of the constructive class.
    pub fn predict_proba(&self, tokens: &[String]) -> f64 {
        let f = net::forward(&self.params, &self.input_for(tokens), None);
        net::softmax(&f.logits)[1]
    }

    fn predict_inputs(&self, inputs: &[Input]) -> Vec<Label> {
        inputs
            .par_iter()
            .map(|x| {
                let f = net::forward(&self.params, x, None);
                if f.logits[1] > f.logits[0] {
                    Label::Constructive
                } else {
                    Label::NonConstructive
                }
            })
            .collect()
    }

    pub fn predict_proba_all(&self, docs: &[Vec<String>]) -> Vec<f64> {
        docs.par_iter().map(|d| self.predict_proba(d)).collect()
    }

    /// Constructive when its probability exceeds one half.
    pub fn predict_all(&self, docs: &[Vec<String>]) -> Vec<Label> {
        self.predict_proba_all(docs)
            .into_iter()
            .map(|p| if p > 0.5 { Label::Constructive } else { Label::NonConstructive })
            .collect()
    }

    pub fn evaluate(&self, docs: &[Vec<String>], gold: &[Label]) -> Result<Metrics> {
        evaluate_labels(gold, &self.predict_all(docs))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let ck = Checkpoint {
            format: "cnn-text-checkpoint".into(),
            version: CHECKPOINT_VERSION,
            shape: self.params.shape,
            n_params: self.params.theta.len(),
            vocab_size: self.embeddings.len(),
            model: self.clone(),
        };
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(std::io::BufWriter::new(f), &ck)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let ck: Checkpoint = serde_json::from_reader(std::io::BufReader::new(f))?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Data(format!("unsupported checkpoint version {}", ck.version)));
        }
        let mut model = ck.model;
        if model.params.shape != ck.shape
            || model.params.theta.len() != ck.shape.n_params()
            || ck.n_params != ck.shape.n_params()
            || model.embeddings.dim() != ck.shape.dim
        {
            return Err(Error::Data("checkpoint shape header does not match its contents".into()));
        }
        model.embeddings.reindex();
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize, seed: u64) -> (Vec<Vec<String>>, Vec<Label>) {
        use rand::Rng;
        let words = ["alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut docs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n {
            let len = rng.random_range(3..12);
            let mut d: Vec<String> = (0..len).map(|_| words[rng.random_range(0..words.len())].to_string()).collect();
            let pos = i % 2 == 0;
            if pos {
                let at = rng.random_range(0..=d.len());
                d.insert(at, "xyz".into());
            }
            docs.push(d);
            ys.push(if pos { Label::Constructive } else { Label::NonConstructive });
        }
        (docs, ys)
    }

    fn table() -> EmbeddingTable {
        EmbeddingTable::random(
            ["alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta", "xyz"],
            8,
            11,
        )
        .unwrap()
    }

    fn small_cfg() -> CnnTrainConfig {
        CnnTrainConfig {
            filters_per_width: 16,
            epochs: 5,
            ..CnnTrainConfig::default()
        }
    }

    #[test]
    fn learns_marker_token() {
        let (docs, ys) = toy(2000, 1);
        let cfg = CnnTrainConfig {
            learning_rate: 0.005,
            ..small_cfg()
        };
        let (model, log) = CnnModel::train(&docs, &ys, table(), &cfg).unwrap();
        assert_eq!(log.len(), 5);
        let (td, ty) = toy(300, 2);
        assert_eq!(model.evaluate(&td, &ty).unwrap().accuracy, 1.0);
    }

    #[test]
    fn deterministic() {
        let (docs, ys) = toy(200, 3);
        let cfg = CnnTrainConfig {
            epochs: 2,
            ..small_cfg()
        };
        let a = CnnModel::train(&docs, &ys, table(), &cfg).unwrap().0;
        let b = CnnModel::train(&docs, &ys, table(), &cfg).unwrap().0;
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn fine_tuning_moves_embeddings() {
        let (docs, ys) = toy(200, 4);
        let cfg = CnnTrainConfig {
            epochs: 1,
            fine_tune_embeddings: true,
            ..small_cfg()
        };
        let t = table();
        let (m, _) = CnnModel::train(&docs, &ys, t.clone(), &cfg).unwrap();
        assert_ne!(m.embeddings.lookup("xyz"), t.lookup("xyz"));
        let frozen = CnnModel::train(&docs, &ys, t.clone(), &CnnTrainConfig { fine_tune_embeddings: false, ..cfg })
            .unwrap()
            .0;
        assert_eq!(frozen.embeddings.lookup("xyz"), t.lookup("xyz"));
    }

    #[test]
    fn checkpoint_round_trip() {
        let (docs, ys) = toy(100, 5);
        let cfg = CnnTrainConfig {
            epochs: 1,
            ..small_cfg()
        };
        let (m, _) = CnnModel::train(&docs, &ys, table(), &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cnn.json");
        m.save(&p).unwrap();
        let back = CnnModel::load(&p).unwrap();
        assert_eq!(back.params, m.params);
        assert_eq!(back.predict_proba(&docs[0]), m.predict_proba(&docs[0]));
    }

    #[test]
    fn single_class_rejected() {
        let docs = vec![vec!["a".to_string()]; 2];
        let ys = [Label::Constructive; 2];
        assert!(matches!(
            CnnModel::train(&docs, &ys, table(), &small_cfg()),
            Err(Error::Training(_))
        ));
    }
}
