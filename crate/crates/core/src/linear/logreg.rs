//! Logistic regression on scaled predictors with Wald confidence intervals.
//!
//! Predictors are divided by their sample standard deviation (and optionally
//! centred). The mean log-loss is minimised by full-batch gradient descent
//! with Barzilai-Borwein trial steps and Armijo backtracking.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::metrics::{evaluate_labels, Metrics};
use super::sgd::sigmoid;
use crate::corpus::{Label, LabeledComment, SubCharacteristic};
use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

fn default_max_iter() -> usize {
    20_000
}
fn default_tol() -> f64 {
    1e-8
}
fn default_cap() -> f64 {
    30.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct LogRegConfig {
    /// Subtract the mean as well as dividing by the standard deviation.
    #[serde(default)]
    pub center: bool,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Stop when the gradient norm of the mean log-loss falls below this.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Coefficients are clipped to ±cap on separable data.
    #[serde(default = "default_cap")]
    pub coefficient_cap: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            center: false,
            max_iter: default_max_iter(),
            tol: default_tol(),
            coefficient_cap: default_cap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub variable: String,
    pub coefficient: f64,
    /// `None` when the information matrix is singular or the data separable.
    pub std_error: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegResult {
    pub intercept: Coefficient,
    pub coefficients: Vec<Coefficient>,
    pub scale: Vec<f64>,
    pub center: Option<Vec<f64>>,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
    pub separable: bool,
    pub in_sample: Metrics,
}

impl LogRegResult {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.coefficients.iter().find(|c| c.variable == name).map(|c| c.coefficient)
    }

    /// Probability of the positive class for unscaled predictors.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let mut z = self.intercept.coefficient;
        for (j, v) in x.iter().enumerate() {
            let c = self.center.as_ref().map_or(0.0, |m| m[j]);
            z += self.coefficients[j].coefficient * (v - c) / self.scale[j];
        }
        sigmoid(z)
    }
}

fn sample_std(col: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = col.clone().count() as f64;
    let mean = col.clone().sum::<f64>() / n;
    let var = col.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-comment annotator counts for the ten sub-characteristics, in
/// [`SubCharacteristic::ALL`] order, with the variable names.
pub fn subchar_design(comments: &[LabeledComment]) -> (Vec<Vec<f64>>, Vec<String>) {
    let names = SubCharacteristic::ALL.iter().map(|c| c.name().to_string()).collect();
    let x = comments
        .iter()
        .map(|c| SubCharacteristic::ALL.iter().map(|&s| c.raw.subchar_count(s)).collect())
        .collect();
    (x, names)
}

fn mean_loss_and_grad(z: &[Vec<f64>], y: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let n = y.len() as f64;
    let p = beta.len();
    let mut loss = 0.0;
    let mut g = vec![0.0; p];
    for (row, &yi) in z.iter().zip(y) {
        let eta: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
        // log(1 + e^η) − y·η
        loss += if eta > 0.0 {
            eta + (-eta).exp().ln_1p()
        } else {
            eta.exp().ln_1p()
        } - yi * eta;
        let r = sigmoid(eta) - yi;
        for (gj, xj) in g.iter_mut().zip(row) {
            *gj += r * xj;
        }
    }
    g.iter_mut().for_each(|v| *v /= n);
    (loss / n, g)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Fit on raw predictors `x` (rows × variables) against labels `y`.
pub fn train_logreg_standardized(
    x: &[Vec<f64>],
    names: &[String],
    y: &[Label],
    cfg: &LogRegConfig,
) -> Result<LogRegResult> {
    if x.len() != y.len() {
        return Err(Error::Usage(format!("{} rows but {} labels", x.len(), y.len())));
    }
    let pos = y.iter().filter(|l| l.is_positive()).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::Training("logistic regression needs both classes".into()));
    }
    let k = names.len();
    if x.iter().any(|r| r.len() != k) {
        return Err(Error::Usage("ragged predictor matrix".into()));
    }
    let mut scale = Vec::with_capacity(k);
    let mut means = Vec::with_capacity(k);
    for j in 0..k {
        let (m, s) = sample_std(x.iter().map(|r| r[j]));
        if !(s > 0.0) {
            return Err(Error::Degenerate(format!("predictor `{}` is constant", names[j])));
        }
        scale.push(s);
        means.push(m);
    }
    // design with a leading intercept column
    let z: Vec<Vec<f64>> = x
        .iter()
        .map(|r| {
            let mut row = Vec::with_capacity(k + 1);
            row.push(1.0);
            for j in 0..k {
                let c = if cfg.center { means[j] } else { 0.0 };
                row.push((r[j] - c) / scale[j]);
            }
            row
        })
        .collect();
    let yf: Vec<f64> = y.iter().map(|l| l.as_f64()).collect();

    let mut beta = vec![0.0; k + 1];
    let (mut loss, mut grad) = mean_loss_and_grad(&z, &yf, &beta);
    let mut step = 1.0;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut iterations = 0;
    let mut converged = false;
    let mut hit_cap = false;
    while iterations < cfg.max_iter {
        let gn = norm(&grad);
        if gn < cfg.tol {
            converged = true;
            break;
        }
        iterations += 1;
        if let Some((pb, pg)) = &prev {
            let s: Vec<f64> = beta.iter().zip(pb).map(|(a, b)| a - b).collect();
            let d: Vec<f64> = grad.iter().zip(pg).map(|(a, b)| a - b).collect();
            let sd: f64 = s.iter().zip(&d).map(|(a, b)| a * b).sum();
            if sd > 0.0 {
                step = s.iter().map(|v| v * v).sum::<f64>() / sd;
            }
        }
        let mut t = step;
        let (next, nloss, ngrad) = loop {
            let cand: Vec<f64> = beta.iter().zip(&grad).map(|(b, g)| b - t * g).collect();
            let (l, g) = mean_loss_and_grad(&z, &yf, &cand);
            let flat = (l - loss).abs() <= 1e-12 * loss.abs().max(1.0) && norm(&g) < gn;
            if l <= loss - 1e-4 * t * gn * gn || flat || t < 1e-20 {
                break (cand, l, g);
            }
            t *= 0.5;
        };
        prev = Some((std::mem::replace(&mut beta, next), std::mem::replace(&mut grad, ngrad)));
        loss = nloss;
        step = t.max(1e-12);
        if beta.iter().any(|b| b.abs() > cfg.coefficient_cap) {
            hit_cap = true;
            break;
        }
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Training("logistic regression diverged".into()));
    }
    let gradient_norm = norm(&grad);

    let preds: Vec<Label> = z
        .iter()
        .map(|r| {
            let eta: f64 = r.iter().zip(&beta).map(|(a, b)| a * b).sum();
            if eta > 0.0 {
                Label::Constructive
            } else {
                Label::NonConstructive
            }
        })
        .collect();
    let in_sample = evaluate_labels(y, &preds)?;
    // a perfect in-sample fit means the likelihood has no finite maximiser
    let separable = hit_cap || in_sample.accuracy == 1.0;
    if separable {
        log::warn!("data look separable; coefficients capped, standard errors not reported");
        for b in &mut beta {
            *b = b.clamp(-cfg.coefficient_cap, cfg.coefficient_cap);
        }
    } else if !converged {
        log::warn!("logistic regression stopped at {iterations} iterations, gradient norm {gradient_norm:.3e}");
    }

    let se = if separable { None } else { wald_std_errors(&z, &beta) };
    let coef = |j: usize, name: &str| {
        let s = se.as_ref().map(|v| v[j]);
        Coefficient {
            variable: name.to_string(),
            coefficient: beta[j],
            std_error: s,
            ci_low: s.map(|s| beta[j] - Z_95 * s),
            ci_high: s.map(|s| beta[j] + Z_95 * s),
        }
    };
    Ok(LogRegResult {
        intercept: coef(0, "intercept"),
        coefficients: names.iter().enumerate().map(|(j, n)| coef(j + 1, n)).collect(),
        scale,
        center: cfg.center.then_some(means),
        iterations,
        gradient_norm,
        converged,
        separable,
        in_sample,
    })
}

/// `sqrt(diag((XᵀWX)⁻¹))` with `W = diag(p(1−p))`, the inverse observed
/// information of the summed log-likelihood.
fn wald_std_errors(z: &[Vec<f64>], beta: &[f64]) -> Option<Vec<f64>> {
    let p = beta.len();
    let mut info = DMatrix::<f64>::zeros(p, p);
    for row in z {
        let eta: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
        let pr = sigmoid(eta);
        let w = pr * (1.0 - pr);
        for a in 0..p {
            for b in 0..=a {
                info[(a, b)] += w * row[a] * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            info[(b, a)] = info[(a, b)];
        }
    }
    let inv = info.cholesky()?.inverse();
    let se: Vec<f64> = (0..p).map(|j| inv[(j, j)].sqrt()).collect();
    se.iter().all(|s| s.is_finite()).then_some(se)
}

/// Coefficient table: `variable,coefficient,ci_low,ci_high`, intercept last.
pub fn write_coefficients_csv<W: Write>(writer: W, r: &LogRegResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Data(format!("writing coefficient CSV: {e}"));
    w.write_record(["variable", "coefficient", "ci_low", "ci_high"]).map_err(err)?;
    let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.4}"));
    for c in r.coefficients.iter().chain(std::iter::once(&r.intercept)) {
        w.write_record([
            c.variable.clone(),
            format!("{:.4}", c.coefficient),
            fmt(c.ci_low),
            fmt(c.ci_high),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Data(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn simulated(n: usize, beta: &[f64], seed: u64) -> (Vec<Vec<f64>>, Vec<Label>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let row: Vec<f64> = (1..beta.len()).map(|_| rng.random_range(0..4) as f64).collect();
            let eta = beta[0] + row.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>();
            y.push(if rng.random::<f64>() < sigmoid(eta) {
                Label::Constructive
            } else {
                Label::NonConstructive
            });
            x.push(row);
        }
        (x, y)
    }

    #[test]
    fn recovers_coefficients() {
        let beta = [-0.5, 0.8, -0.6];
        let (x, y) = simulated(20_000, &beta, 7);
        let names = vec!["a".to_string(), "b".to_string()];
        let r = train_logreg_standardized(&x, &names, &y, &LogRegConfig::default()).unwrap();
        assert!(r.converged && !r.separable, "{} {} {:?}", r.iterations, r.gradient_norm, r.coefficients);
        // scaled coefficient = raw coefficient · std
        for j in 0..2 {
            let raw = r.coefficients[j].coefficient / r.scale[j];
            assert!((raw - beta[j + 1]).abs() < 0.06, "{j}: {raw}");
            let c = &r.coefficients[j];
            assert!(c.ci_low.unwrap() < c.coefficient && c.coefficient < c.ci_high.unwrap());
        }
        assert!((r.intercept.coefficient - beta[0]).abs() < 0.1);
    }

    #[test]
    fn gradient_is_zero_at_optimum() {
        let (x, y) = simulated(500, &[0.2, 0.5], 3);
        let r = train_logreg_standardized(&x, &["a".into()], &y, &LogRegConfig::default()).unwrap();
        assert!(r.gradient_norm < 1e-8);
    }

    #[test]
    fn separable_is_flagged() {
        let y: Vec<Label> = (0..20)
            .map(|i| if i % 2 == 0 { Label::Constructive } else { Label::NonConstructive })
            .collect();
        let x: Vec<Vec<f64>> = y.iter().map(|l| vec![l.as_f64(), (l.as_f64() + 1.0) % 3.0]).collect();
        let x: Vec<Vec<f64>> = x.into_iter().enumerate().map(|(i, mut r)| {
            r[1] = (i % 3) as f64;
            r
        }).collect();
        let r = train_logreg_standardized(&x, &["same".into(), "noise".into()], &y, &LogRegConfig::default()).unwrap();
        assert!(r.separable, "{} {} {:?}", r.iterations, r.gradient_norm, r.coefficients);
        assert!(r.coefficients[0].coefficient > 0.0);
        assert!(r.coefficients[0].std_error.is_none());
        assert_eq!(r.in_sample.f1, 1.0);
    }

    #[test]
    fn constant_predictor_is_degenerate() {
        let y = [Label::Constructive, Label::NonConstructive];
        let x = vec![vec![1.0], vec![1.0]];
        assert!(matches!(
            train_logreg_standardized(&x, &["c".into()], &y, &LogRegConfig::default()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn csv_shape() {
        let (x, y) = simulated(300, &[0.0, 1.0], 5);
        let r = train_logreg_standardized(&x, &["a".into()], &y, &LogRegConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_coefficients_csv(&mut buf, &r).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "variable,coefficient,ci_low,ci_high");
        assert!(lines[1].starts_with("a,"));
        assert!(lines[2].starts_with("intercept,"));
    }
}
