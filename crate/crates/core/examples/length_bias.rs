//! Length profile of a linear model's errors: FP/FN histogram and the
//! correlation between error score and length.

use constructive::analysis::{collect_errors, length_bias_report, Prediction, DEFAULT_BUCKET_EDGES};
use constructive::corpus::{label_all, split_train_test, Label};
use constructive::features::{FeatureConfig, FeatureExtractor, FeatureMatrix};
use constructive::linear::{self, sgd::label_for_score, TrainConfig};
use constructive::synthetic::{synthetic_corpus, SyntheticConfig};

fn main() -> constructive::Result<()> {
    let corpus = label_all(synthetic_corpus(&SyntheticConfig {
        n_comments: 3000,
        ..SyntheticConfig::default()
    }));
    let (train, test) = split_train_test(&corpus, 0.2, 42)?;
    let fx = FeatureExtractor::fit(&train, &FeatureConfig::default())?;
    let g = fx.active_groups();
    let xtr = FeatureMatrix::assemble(&fx.extract_all(&train)?, &g, fx.sparse_dim(), &fx.config.aux)?;
    let xte = FeatureMatrix::assemble(&fx.extract_all(&test)?, &g, fx.sparse_dim(), &fx.config.aux)?;
    let y: Vec<Label> = train.iter().map(|c| c.label).collect();
    let model = linear::train(&xtr, &y, &TrainConfig::default())?;
    let preds: Vec<Prediction> = test
        .iter()
        .zip(model.scores(&xte))
        .map(|(c, s)| Prediction {
            id: c.raw.id.clone(),
            label: label_for_score(s),
            score: s,
        })
        .collect();
    let errors = collect_errors(&preds, &test)?;
    let r = length_bias_report("linear", "decision_value", &errors, &DEFAULT_BUCKET_EDGES, None)?;
    println!(
        "{} FN (mean length {:?}), {} FP (mean length {:?})",
        r.n_false_negative, r.mean_fn_length, r.n_false_positive, r.mean_fp_length
    );
    println!("corr(score, length) {:?}, corr(|score|, length) {:?}", r.score_length_corr.value, r.abs_score_length_corr.value);
    r.histogram.write_csv(std::io::stdout())?;
    Ok(())
}
