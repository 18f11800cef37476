//! Evaluation studies: error length bias, feature ablation, domain transfer
//! and corpus-level correlations.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agreement::{kendall_tau, pearson, spearman, Estimate, StatRecord};
use crate::corpus::{Label, LabeledComment};
use crate::error::{Error, Result};
use crate::features::aux::AuxLayout;
use crate::features::{FeatureConfig, FeatureExtractor, FeatureGroup, FeatureMatrix, FeatureVector};
use crate::linear::{self, Metrics, TrainConfig};

/// Default histogram edges in word tokens; the last bucket is open.
pub const DEFAULT_BUCKET_EDGES: [f64; 10] = [0.0, 25.0, 50.0, 75.0, 100.0, 150.0, 200.0, 300.0, 500.0, f64::INFINITY];

/// A model's output on one test comment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub label: Label,
    /// Decision value (linear) or constructive probability (CNN).
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub id: String,
    pub true_label: Label,
    pub predicted: Label,
    pub score: f64,
    pub token_length: usize,
}

impl ErrorRecord {
    pub fn is_false_positive(&self) -> bool {
        self.predicted.is_positive() && !self.true_label.is_positive()
    }
}

/// The misclassified comments. Predictions must align with `test` by id.
pub fn collect_errors(predictions: &[Prediction], test: &[LabeledComment]) -> Result<Vec<ErrorRecord>> {
    if predictions.len() != test.len() {
        return Err(Error::Data(format!(
            "{} predictions for {} test comments",
            predictions.len(),
            test.len()
        )));
    }
    let mut out = Vec::new();
    for (p, c) in predictions.iter().zip(test) {
        if p.id != c.raw.id {
            return Err(Error::Data(format!("prediction id `{}` does not match test id `{}`", p.id, c.raw.id)));
        }
        if p.label != c.label {
            out.push(ErrorRecord {
                id: p.id.clone(),
                true_label: c.label,
                predicted: p.label,
                score: p.score,
                token_length: c.token_length,
            });
        }
    }
    Ok(out)
}

/// FP/FN counts per length bucket `[edges[i], edges[i+1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthHistogram {
    pub edges: Vec<f64>,
    pub fp: Vec<usize>,
    #[serde(rename = "fn")]
    pub fn_: Vec<usize>,
}

pub fn validate_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::Config("need at least two bucket edges".into()));
    }
    if edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("bucket edges must be strictly increasing".into()));
    }
    Ok(())
}

impl LengthHistogram {
    pub fn build(errors: &[ErrorRecord], edges: &[f64]) -> Result<Self> {
        validate_edges(edges)?;
        let k = edges.len() - 1;
        let mut h = LengthHistogram {
            edges: edges.to_vec(),
            fp: vec![0; k],
            fn_: vec![0; k],
        };
        for e in errors {
            let len = e.token_length as f64;
            let Some(b) = (0..k).find(|&b| len >= edges[b] && len < edges[b + 1]) else {
                log::warn!("error {} with length {len} falls outside the buckets", e.id);
                continue;
            };
            if e.is_false_positive() {
                h.fp[b] += 1;
            } else {
                h.fn_[b] += 1;
            }
        }
        Ok(h)
    }

    pub fn total_fp(&self) -> usize {
        self.fp.iter().sum()
    }

    pub fn total_fn(&self) -> usize {
        self.fn_.iter().sum()
    }

    /// CSV with `bucket_low,bucket_high,fp_count,fn_count`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::Data(format!("writing histogram CSV: {e}"));
        w.write_record(["bucket_low", "bucket_high", "fp_count", "fn_count"]).map_err(err)?;
        for b in 0..self.fp.len() {
            let hi = self.edges[b + 1];
            w.write_record([
                format!("{}", self.edges[b]),
                if hi.is_infinite() { "inf".to_string() } else { format!("{hi}") },
                self.fp[b].to_string(),
                self.fn_[b].to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::Data(e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthBiasReport {
    pub model: String,
    /// What the score column means for this model.
    pub score_kind: String,
    pub n_false_positive: usize,
    pub n_false_negative: usize,
    pub mean_fn_length: Option<f64>,
    pub mean_fp_length: Option<f64>,
    /// Pearson(score, length) over errors.
    pub score_length_corr: StatRecord,
    /// Pearson(|score|, length) over errors.
    pub abs_score_length_corr: StatRecord,
    pub test_f1: Option<f64>,
    pub histogram: LengthHistogram,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

fn corr_record(name: &str, x: &[f64], y: &[f64]) -> StatRecord {
    let est = if x.len() < 2 {
        Estimate::Degenerate
    } else {
        pearson(x, y).unwrap_or(Estimate::Degenerate)
    };
    StatRecord::new(name, est, x.len(), 0)
}

pub fn length_bias_report(
    model: &str,
    score_kind: &str,
    errors: &[ErrorRecord],
    edges: &[f64],
    test_f1: Option<f64>,
) -> Result<LengthBiasReport> {
    let histogram = LengthHistogram::build(errors, edges)?;
    let lens: Vec<f64> = errors.iter().map(|e| e.token_length as f64).collect();
    let scores: Vec<f64> = errors.iter().map(|e| e.score).collect();
    let abs: Vec<f64> = scores.iter().map(|s| s.abs()).collect();
    let report = LengthBiasReport {
        model: model.to_string(),
        score_kind: score_kind.to_string(),
        n_false_positive: errors.iter().filter(|e| e.is_false_positive()).count(),
        n_false_negative: errors.iter().filter(|e| !e.is_false_positive()).count(),
        mean_fn_length: mean(errors.iter().filter(|e| !e.is_false_positive()).map(|e| e.token_length as f64)),
        mean_fp_length: mean(errors.iter().filter(|e| e.is_false_positive()).map(|e| e.token_length as f64)),
        score_length_corr: corr_record("pearson_score_length", &scores, &lens),
        abs_score_length_corr: corr_record("pearson_abs_score_length", &abs, &lens),
        test_f1,
        histogram,
    };
    if report.score_length_corr.degenerate_flag {
        log::warn!("{model}: score/length correlation is degenerate over {} errors", errors.len());
    }
    Ok(report)
}

/// A cell of the ablation table: one feature group, or all of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AblationGroup {
    Only(FeatureGroup),
    All,
}

impl fmt::Display for AblationGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AblationGroup::Only(g) => write!(f, "{g}"),
            AblationGroup::All => f.write_str("all"),
        }
    }
}

impl FromStr for AblationGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "all" {
            Ok(AblationGroup::All)
        } else {
            s.parse().map(AblationGroup::Only)
        }
    }
}

impl AblationGroup {
    /// Table rows: every standard group, then all.
    pub fn standard() -> Vec<AblationGroup> {
        FeatureGroup::STANDARD
            .iter()
            .map(|&g| AblationGroup::Only(g))
            .chain(std::iter::once(AblationGroup::All))
            .collect()
    }

    fn groups(self, available: &[FeatureGroup]) -> Vec<FeatureGroup> {
        match self {
            AblationGroup::Only(g) => vec![g],
            AblationGroup::All => FeatureGroup::STANDARD
                .iter()
                .copied()
                .filter(|g| available.contains(g))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub group: String,
    pub f1: Option<f64>,
    pub metrics: Option<Metrics>,
    /// Why the cell was not computed.
    pub skipped: Option<String>,
}

/// Pre-extracted features of a train/test split.
pub struct FeatureSplit<'a> {
    pub extractor: &'a FeatureExtractor,
    pub train: &'a [FeatureVector],
    pub train_labels: &'a [Label],
    pub test: &'a [FeatureVector],
    pub test_labels: &'a [Label],
}

fn fit_cell(split: &FeatureSplit<'_>, groups: &[FeatureGroup], cfg: &TrainConfig) -> Result<Metrics> {
    let fx = split.extractor;
    let xtr = FeatureMatrix::assemble(split.train, groups, fx.sparse_dim(), &fx.config.aux)?;
    let xte = FeatureMatrix::assemble(split.test, groups, fx.sparse_dim(), &fx.config.aux)?;
    if xtr.dim() == 0 {
        return Err(Error::Degenerate("no usable features".into()));
    }
    let m = linear::train(&xtr, split.train_labels, cfg)?;
    m.evaluate(&xte, split.test_labels)
}

/// One linear model per requested cell with the same training config.
/// Cells run in parallel and are independent of each other.
pub fn feature_ablation(split: &FeatureSplit<'_>, cells: &[AblationGroup], cfg: &TrainConfig) -> Vec<AblationCell> {
    let available = split.extractor.active_groups();
    cells
        .par_iter()
        .map(|&cell| {
            let groups = cell.groups(&available);
            let missing: Vec<&str> = groups
                .iter()
                .filter(|g| !available.contains(g))
                .map(|g| g.name())
                .collect();
            let result = if groups.is_empty() {
                Err(Error::Degenerate("no usable feature groups".into()))
            } else if !missing.is_empty() {
                Err(Error::Degenerate(format!("group unavailable: {}", missing.join(", "))))
            } else {
                fit_cell(split, &groups, cfg)
            };
            match result {
                Ok(m) => AblationCell {
                    group: cell.to_string(),
                    f1: Some(m.f1),
                    metrics: Some(m),
                    skipped: None,
                },
                Err(e) => {
                    log::warn!("ablation cell {cell} skipped: {e}");
                    AblationCell {
                        group: cell.to_string(),
                        f1: None,
                        metrics: None,
                        skipped: Some(e.to_string()),
                    }
                }
            }
        })
        .collect()
}

/// Status string of a transfer cell that could not be computed for lack of data.
pub const DATA_UNAVAILABLE: &str = "data unavailable";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferCell {
    pub train: String,
    pub test: String,
    pub model: String,
    pub f1: Option<f64>,
    pub status: String,
}

impl TransferCell {
    pub fn unavailable(train: &str, test: &str, model: &str) -> Self {
        TransferCell {
            train: train.into(),
            test: test.into(),
            model: model.into(),
            f1: None,
            status: DATA_UNAVAILABLE.into(),
        }
    }
}

/// Train on `train`, evaluate on `test`, one cell per ablation group. The
/// vocabulary and standardisation come from the training corpus only.
pub fn domain_transfer(
    (train_name, train): (&str, &[LabeledComment]),
    (test_name, test): (&str, &[LabeledComment]),
    features: &FeatureConfig,
    cells: &[AblationGroup],
    cfg: &TrainConfig,
) -> Result<Vec<TransferCell>> {
    let fx = FeatureExtractor::fit(train, features)?;
    // aux groups must also exist in the test corpus
    let test_aux = AuxLayout::resolve(&features.aux, test.iter().map(|c| &c.raw))?;
    let mut usable = fx.clone();
    usable.aux.enabled.retain(|g| test_aux.is_enabled(*g));
    for g in fx.aux.enabled.iter().filter(|g| !test_aux.is_enabled(**g)) {
        usable
            .aux
            .disabled
            .insert(g.name().to_string(), format!("absent from {test_name}"));
    }
    let trv = usable.extract_all(train)?;
    let tev = usable.extract_all(test)?;
    let try_: Vec<Label> = train.iter().map(|c| c.label).collect();
    let tey: Vec<Label> = test.iter().map(|c| c.label).collect();
    let split = FeatureSplit {
        extractor: &usable,
        train: &trv,
        train_labels: &try_,
        test: &tev,
        test_labels: &tey,
    };
    Ok(feature_ablation(&split, cells, cfg)
        .into_iter()
        .map(|c| TransferCell {
            train: train_name.into(),
            test: test_name.into(),
            model: c.group,
            f1: c.f1,
            status: c.skipped.unwrap_or_else(|| "ok".into()),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub id: String,
    pub constructiveness: f64,
    pub toxicity: Option<f64>,
    pub agree: Option<f64>,
    pub token_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    /// Constructiveness score against the toxicity column.
    pub toxicity: Vec<StatRecord>,
    /// Constructiveness score against the agreement fraction.
    pub agree: Option<StatRecord>,
    /// Binary label against word-token length.
    pub label_length: Option<StatRecord>,
    /// Pairs skipped with the reason.
    pub skipped: BTreeMap<String, String>,
    pub scatter: Vec<ScatterPoint>,
}

/// Correlation study over a labelled corpus. Pairs whose column is missing
/// are skipped with a diagnostic.
pub fn correlation_study(corpus: &[LabeledComment], toxicity_column: &str) -> Result<CorrelationReport> {
    if corpus.len() < 2 {
        return Err(Error::Usage("correlation study needs at least two comments".into()));
    }
    let mut skipped = BTreeMap::new();

    let tox: Vec<(f64, f64)> = corpus
        .iter()
        .filter_map(|c| c.raw.aux_scores.get(toxicity_column).map(|t| (c.score, *t)))
        .collect();
    let mut toxicity = Vec::new();
    if tox.len() < 2 {
        skipped.insert("constructiveness_toxicity".into(), format!("column `{toxicity_column}` missing"));
    } else {
        let (x, y): (Vec<f64>, Vec<f64>) = tox.iter().copied().unzip();
        let excluded = corpus.len() - tox.len();
        toxicity.push(StatRecord::new("pearson", pearson(&x, &y)?, x.len(), excluded));
        toxicity.push(StatRecord::new("spearman", spearman(&x, &y)?, x.len(), excluded));
        toxicity.push(StatRecord::new("kendall_tau_b", kendall_tau(&x, &y)?, x.len(), excluded));
    }

    let agree_pairs: Vec<(f64, f64)> = corpus
        .iter()
        .filter_map(|c| c.raw.agree_fraction.map(|a| (c.score, a)))
        .collect();
    let agree = if agree_pairs.len() < 2 {
        skipped.insert("constructiveness_agree".into(), "agree column missing".into());
        None
    } else {
        let (x, y): (Vec<f64>, Vec<f64>) = agree_pairs.iter().copied().unzip();
        Some(StatRecord::new("pearson", pearson(&x, &y)?, x.len(), corpus.len() - x.len()))
    };

    let labels: Vec<f64> = corpus.iter().map(|c| c.label.as_f64()).collect();
    let lengths: Vec<f64> = corpus.iter().map(|c| c.token_length as f64).collect();
    let label_length = Some(StatRecord::new("pearson", pearson(&labels, &lengths)?, corpus.len(), 0));

    let scatter = corpus
        .iter()
        .map(|c| ScatterPoint {
            id: c.raw.id.clone(),
            constructiveness: c.score,
            toxicity: c.raw.aux_scores.get(toxicity_column).copied(),
            agree: c.raw.agree_fraction,
            token_length: c.token_length,
        })
        .collect();
    for (k, v) in &skipped {
        log::warn!("correlation {k} skipped: {v}");
    }
    Ok(CorrelationReport {
        toxicity,
        agree,
        label_length,
        skipped,
        scatter,
    })
}

pub fn write_scatter_csv<W: Write>(writer: W, points: &[ScatterPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Data(format!("writing scatter CSV: {e}"));
    w.write_record(["id", "constructiveness", "toxicity", "agree", "token_length"]).map_err(err)?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.4}"));
    for p in points {
        w.write_record([
            p.id.clone(),
            format!("{:.4}", p.constructiveness),
            opt(p.toxicity),
            opt(p.agree),
            p.token_length.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Data(e.to_string()))?;
    Ok(())
}
