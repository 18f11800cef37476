//! Binary classification metrics. The positive class is `constructive`.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Precision, recall and F1 for one class.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl ClassScores {
    fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        ClassScores { precision, recall, f1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Scores with non-constructive as the positive class.
    pub negative: ClassScores,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub confusion: Confusion,
}

pub fn confusion(gold: &[Label], pred: &[Label]) -> Result<Confusion> {
    if gold.len() != pred.len() {
        return Err(Error::Usage(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    let mut c = Confusion::default();
    for (g, p) in gold.iter().zip(pred) {
        match (g.is_positive(), p.is_positive()) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    Ok(c)
}

impl Metrics {
    pub fn from_confusion(c: Confusion) -> Self {
        let pos = ClassScores::from_counts(c.tp, c.fp, c.fn_);
        let neg = ClassScores::from_counts(c.tn, c.fn_, c.fp);
        Metrics {
            precision: pos.precision,
            recall: pos.recall,
            f1: pos.f1,
            negative: neg,
            macro_f1: (pos.f1 + neg.f1) / 2.0,
            accuracy: ratio(c.tp + c.tn, c.total()),
            confusion: c,
        }
    }
}

pub fn evaluate_labels(gold: &[Label], pred: &[Label]) -> Result<Metrics> {
    if gold.is_empty() {
        return Err(Error::Usage("cannot evaluate on an empty set".into()));
    }
    Ok(Metrics::from_confusion(confusion(gold, pred)?))
}
