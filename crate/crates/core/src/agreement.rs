//! Reliability and correlation statistics.
//!
//! Krippendorff's α for nominal data uses the coincidence-matrix form: every
//! unit with `m_u ≥ 2` ratings contributes each ordered pair of its ratings
//! with weight `1 / (m_u - 1)`. Observed disagreement is the off-diagonal mass
//! of that matrix; expected disagreement comes from its marginals.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::annotations::{AgreeMapping, AgreeSide, AnnotatedComment};
use crate::error::{Error, Result};

/// Nominal ratings per unit. Units may have different numbers of raters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RatingMatrix {
    pub units: Vec<String>,
    pub ratings: Vec<Vec<u32>>,
}

impl RatingMatrix {
    pub fn push(&mut self, unit: impl Into<String>, ratings: Vec<u32>) {
        self.units.push(unit.into());
        self.ratings.push(ratings);
    }

    /// Ratings given as rows; unit ids are their indices.
    pub fn from_rows(rows: Vec<Vec<u32>>) -> Self {
        RatingMatrix {
            units: (0..rows.len()).map(|i| i.to_string()).collect(),
            ratings: rows,
        }
    }

    /// Each pair becomes a two-rater unit.
    pub fn from_pairs(pairs: &PairedRatings) -> Self {
        RatingMatrix::from_rows(pairs.pairs.iter().map(|&(a, b)| vec![a, b]).collect())
    }

    /// Constructiveness answers of every annotator, one unit per comment.
    pub fn from_annotations<'a>(comments: impl IntoIterator<Item = &'a AnnotatedComment>) -> Self {
        let mut m = RatingMatrix::default();
        for c in comments {
            m.push(c.id.clone(), c.judgements.iter().map(|j| j.constructive as u32).collect());
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRatings {
    pub pairs: Vec<(u32, u32)>,
}

/// Outcome of a statistic that may be undefined on some inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Estimate {
    Value(f64),
    /// The statistic is undefined (zero variance, zero expected disagreement, ...).
    Degenerate,
}

impl Estimate {
    pub fn value(self) -> Option<f64> {
        match self {
            Estimate::Value(v) => Some(v),
            Estimate::Degenerate => None,
        }
    }

    pub fn is_degenerate(self) -> bool {
        matches!(self, Estimate::Degenerate)
    }
}

/// JSON record for a reported statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRecord {
    pub statistic: String,
    pub value: Option<f64>,
    pub n: usize,
    pub excluded: usize,
    pub degenerate_flag: bool,
}

impl StatRecord {
    pub fn new(statistic: impl Into<String>, estimate: Estimate, n: usize, excluded: usize) -> Self {
        StatRecord {
            statistic: statistic.into(),
            value: estimate.value(),
            n,
            excluded,
            degenerate_flag: estimate.is_degenerate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaResult {
    pub alpha: Estimate,
    /// Units that contributed pairs.
    pub units_used: usize,
    /// Units dropped for having fewer than two ratings.
    pub units_excluded: usize,
    /// Total pairable values `n`.
    pub pairable_values: usize,
}

impl AlphaResult {
    pub fn record(&self, statistic: &str) -> StatRecord {
        StatRecord::new(statistic, self.alpha, self.units_used, self.units_excluded)
    }
}

/// Krippendorff's α for nominal ratings.
///
/// Errors when fewer than two units are usable. A matrix whose ratings are all
/// identical has zero expected disagreement and yields [`Estimate::Degenerate`].
pub fn krippendorff_alpha_nominal(m: &RatingMatrix) -> Result<AlphaResult> {
    let mut coincidence: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    let mut used = 0usize;
    let mut excluded = 0usize;
    for unit in &m.ratings {
        let mu = unit.len();
        if mu < 2 {
            excluded += 1;
            continue;
        }
        used += 1;
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for &v in unit {
            *counts.entry(v).or_default() += 1;
        }
        let w = 1.0 / (mu as f64 - 1.0);
        // ordered pairs (i, j), i ≠ j: n_c·n_k for c ≠ k, n_c·(n_c − 1) on the diagonal
        for (&c, &nc) in &counts {
            for (&k, &nk) in &counts {
                let pairs = if c == k { nc * (nc - 1) } else { nc * nk };
                if pairs > 0 {
                    *coincidence.entry((c, k)).or_default() += pairs as f64 * w;
                }
            }
        }
    }
    if used < 2 {
        return Err(Error::Usage(format!(
            "alpha needs at least two units with two or more ratings, found {used}"
        )));
    }
    let mut marginals: BTreeMap<u32, f64> = BTreeMap::new();
    for (&(c, _), &o) in &coincidence {
        *marginals.entry(c).or_default() += o;
    }
    let n: f64 = marginals.values().sum();
    let observed: f64 = coincidence
        .iter()
        .filter(|((c, k), _)| c != k)
        .map(|(_, o)| o)
        .sum();
    let total_sq: f64 = marginals.values().sum::<f64>().powi(2);
    let same_sq: f64 = marginals.values().map(|v| v * v).sum();
    // Σ_{c≠k} n_c n_k
    let expected_pairs = total_sq - same_sq;
    let alpha = if expected_pairs <= 0.0 {
        Estimate::Degenerate
    } else {
        let d_o = observed / n;
        let d_e = expected_pairs / (n * (n - 1.0));
        Estimate::Value(1.0 - d_o / d_e)
    };
    Ok(AlphaResult {
        alpha,
        units_used: used,
        units_excluded: excluded,
        pairable_values: n.round() as usize,
    })
}

/// Mean α over groups (for example annotation batches); degenerate groups are skipped.
pub fn mean_alpha<'a>(groups: impl IntoIterator<Item = &'a RatingMatrix>) -> Result<(Estimate, usize)> {
    let mut values = Vec::new();
    for g in groups {
        if let Some(v) = krippendorff_alpha_nominal(g)?.alpha.value() {
            values.push(v);
        }
    }
    if values.is_empty() {
        return Ok((Estimate::Degenerate, 0));
    }
    let n = values.len();
    Ok((Estimate::Value(values.iter().sum::<f64>() / n as f64), n))
}

/// Share of pairs whose two values agree.
pub fn percentage_agreement(p: &PairedRatings) -> Result<f64> {
    if p.pairs.is_empty() {
        return Err(Error::Usage("percentage agreement over zero pairs".into()));
    }
    let same = p.pairs.iter().filter(|(a, b)| a == b).count();
    Ok(same as f64 / p.pairs.len() as f64)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Pairs of constructiveness answers from one agreeing and one disagreeing
/// annotator, sampled uniformly per side, for every comment that has both.
///
/// Sampling for each comment uses an RNG derived from `seed` and the comment
/// id, so a comment's pair depends only on the seed and its own annotators.
pub fn controversial_pairs(
    comments: &[AnnotatedComment],
    mapping: &AgreeMapping,
    seed: u64,
) -> PairedRatings {
    let mut pairs = Vec::new();
    for c in comments {
        let side = |s: AgreeSide| -> Vec<u32> {
            c.judgements
                .iter()
                .filter(|j| j.agree.is_some_and(|a| mapping.side(a) == s))
                .map(|j| j.constructive as u32)
                .collect()
        };
        let agree = side(AgreeSide::Agree);
        let disagree = side(AgreeSide::Disagree);
        if agree.is_empty() || disagree.is_empty() {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(c.id.as_bytes()));
        let a = agree[rng.random_range(0..agree.len())];
        let d = disagree[rng.random_range(0..disagree.len())];
        pairs.push((a, d));
    }
    if pairs.is_empty() {
        log::warn!("no controversial comments: none has both an agreeing and a disagreeing annotator");
    }
    PairedRatings { pairs }
}

fn check_paired(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Usage(format!(
            "correlation inputs differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Usage("correlation needs at least two observations".into()));
    }
    Ok(())
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Estimate> {
    check_paired(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Ok(Estimate::Degenerate);
    }
    Ok(Estimate::Value((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)))
}

/// 1-based ranks, ties get the average of the ranks they span.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's ρ: Pearson over average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Estimate> {
    check_paired(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Kendall's τ-b with tie correction.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<Estimate> {
    check_paired(x, y)?;
    let n = x.len();
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut tied_x, mut tied_y) = (0i64, 0i64);
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i].total_cmp(&x[j]) as i64;
            let dy = y[i].total_cmp(&y[j]) as i64;
            if dx == 0 {
                tied_x += 1;
            }
            if dy == 0 {
                tied_y += 1;
            }
            match dx * dy {
                1 => concordant += 1,
                -1 => discordant += 1,
                _ => {}
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    let denom = ((n0 - tied_x) as f64) * ((n0 - tied_y) as f64);
    if denom <= 0.0 {
        return Ok(Estimate::Degenerate);
    }
    Ok(Estimate::Value(
        ((concordant - discordant) as f64 / denom.sqrt()).clamp(-1.0, 1.0),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::annotations::{AgreeAnswer, Judgement};

    fn j(constructive: bool, agree: AgreeAnswer) -> Judgement {
        Judgement {
            annotator: None,
            constructive,
            agree: Some(agree),
            subchars: vec![],
        }
    }

    fn unit(id: &str, js: Vec<Judgement>) -> AnnotatedComment {
        AnnotatedComment {
            id: id.into(),
            text: "t".into(),
            batch: None,
            judgements: js,
            aux_scores: Default::default(),
        }
    }

    #[test]
    fn worked_alpha() {
        let m = RatingMatrix::from_rows(vec![vec![1, 1], vec![0, 0], vec![1, 0]]);
        let a = krippendorff_alpha_nominal(&m).unwrap();
        assert!((a.alpha.value().unwrap() - 4.0 / 9.0).abs() < 1e-12);
        assert_eq!(a.units_used, 3);
        assert_eq!(a.pairable_values, 6);
    }

    #[test]
    fn perfect_agreement_and_singletons() {
        let m = RatingMatrix::from_rows(vec![vec![1, 1, 1], vec![0, 0], vec![1], vec![0, 0, 0, 0]]);
        let a = krippendorff_alpha_nominal(&m).unwrap();
        assert_eq!(a.alpha, Estimate::Value(1.0));
        assert_eq!(a.units_excluded, 1);
    }

    #[test]
    fn all_identical_is_degenerate() {
        let m = RatingMatrix::from_rows(vec![vec![1, 1], vec![1, 1, 1]]);
        assert!(krippendorff_alpha_nominal(&m).unwrap().alpha.is_degenerate());
        let m = RatingMatrix::from_rows(vec![vec![1, 1]]);
        assert!(krippendorff_alpha_nominal(&m).is_err());
    }

    #[test]
    fn percentage() {
        let p = PairedRatings {
            pairs: vec![(1, 1), (0, 0), (1, 0), (1, 1)],
        };
        assert_eq!(percentage_agreement(&p).unwrap(), 0.75);
        let p = PairedRatings { pairs: vec![(0, 0); 5] };
        assert_eq!(percentage_agreement(&p).unwrap(), 1.0);
        assert!(percentage_agreement(&PairedRatings { pairs: vec![] }).is_err());
    }

    #[test]
    fn controversial_selection() {
        let cs = vec![
            unit("a", vec![j(true, AgreeAnswer::Yes), j(true, AgreeAnswer::No)]),
            unit("b", vec![j(true, AgreeAnswer::Yes), j(false, AgreeAnswer::Yes)]),
            unit("c", vec![j(false, AgreeAnswer::Partially), j(true, AgreeAnswer::No)]),
        ];
        let p = controversial_pairs(&cs, &AgreeMapping::default(), 1);
        assert_eq!(p.pairs, vec![(1, 1)]);
    }

    #[test]
    fn reseeding_only_moves_multi_choice_comments() {
        let cs = vec![
            unit("single", vec![j(true, AgreeAnswer::Yes), j(false, AgreeAnswer::No)]),
            unit(
                "multi",
                vec![
                    j(true, AgreeAnswer::Yes),
                    j(false, AgreeAnswer::Yes),
                    j(true, AgreeAnswer::No),
                ],
            ),
        ];
        let m = AgreeMapping::default();
        let mut seen_multi = std::collections::BTreeSet::new();
        for seed in 0..64 {
            let p = controversial_pairs(&cs, &m, seed);
            assert_eq!(p.pairs[0], (1, 0));
            seen_multi.insert(p.pairs[1]);
            assert_eq!(p.pairs, controversial_pairs(&cs, &m, seed).pairs);
        }
        assert_eq!(seen_multi.len(), 2);
    }

    #[test]
    fn pearson_cases() {
        assert!((pearson(&[1., 2., 3.], &[2., 4., 6.]).unwrap().value().unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&[1., 2., 3.], &[3., 2., 1.]).unwrap().value().unwrap() + 1.0).abs() < 1e-12);
        // mean 2.5 for both; Σdxdy = 2.25+(-0.25)+(-0.25)+2.25 = 4, Σdx² = 5
        assert!((pearson(&[1., 2., 3., 4.], &[1., 3., 2., 4.]).unwrap().value().unwrap() - 0.8).abs() < 1e-12);
        assert!(pearson(&[1., 1., 1.], &[1., 2., 3.]).unwrap().is_degenerate());
        assert!(pearson(&[1.], &[1.]).is_err());
        assert!(pearson(&[1., 2.], &[1.]).is_err());
    }

    #[test]
    fn spearman_cases() {
        assert!((spearman(&[1., 2., 3.], &[9., 4., 1.]).unwrap().value().unwrap() + 1.0).abs() < 1e-12);
        assert!((spearman(&[1., 2., 3., 4.], &[1., 8., 27., 64.]).unwrap().value().unwrap() - 1.0).abs() < 1e-12);
        // rank table: x → [1.5, 1.5, 3], y → [1, 2, 3]
        // dx = [-.5, -.5, 1], dy = [-1, 0, 1]; r = 1.5 / sqrt(1.5 · 2)
        let expected = 1.5 / (1.5f64 * 2.0).sqrt();
        assert!((spearman(&[1., 1., 2.], &[1., 2., 3.]).unwrap().value().unwrap() - expected).abs() < 1e-12);
        assert_eq!(average_ranks(&[3., 1., 3., 2.]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn kendall_cases() {
        assert!((kendall_tau(&[1., 2., 3.], &[1., 2., 5.]).unwrap().value().unwrap() - 1.0).abs() < 1e-12);
        assert!((kendall_tau(&[1., 2., 3.], &[1., 3., 2.]).unwrap().value().unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((kendall_tau(&[1., 2., 3.], &[3., 2., 1.]).unwrap().value().unwrap() + 1.0).abs() < 1e-12);
        assert!(kendall_tau(&[2., 2., 2.], &[3., 2., 1.]).unwrap().is_degenerate());
    }
}
