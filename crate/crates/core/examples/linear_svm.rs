//! Train the hinge-loss linear model on an 80/20 split and report F1.

use constructive::corpus::{label_all, split_train_test, Label};
use constructive::features::{FeatureConfig, FeatureExtractor, FeatureMatrix};
use constructive::linear::{self, LinearModel, TrainConfig};
use constructive::synthetic::{synthetic_corpus, SyntheticConfig};

fn main() -> constructive::Result<()> {
    let corpus = label_all(synthetic_corpus(&SyntheticConfig::default()));
    let (train, test) = split_train_test(&corpus, 0.2, 42)?;
    let fx = FeatureExtractor::fit(&train, &FeatureConfig::default())?;
    let groups = fx.active_groups();
    let build = |docs| -> constructive::Result<FeatureMatrix> {
        FeatureMatrix::assemble(&fx.extract_all(docs)?, &groups, fx.sparse_dim(), &fx.config.aux)
    };
    let (xtr, xte) = (build(&train)?, build(&test)?);
    let labels = |c: &[constructive::corpus::LabeledComment]| -> Vec<Label> { c.iter().map(|c| c.label).collect() };
    let model = linear::train(&xtr, &labels(&train), &TrainConfig::default())?;
    let m = model.evaluate(&xte, &labels(&test))?;
    println!("test F1 {:.4}, macro F1 {:.4}, accuracy {:.4}", m.f1, m.macro_f1, m.accuracy);
    println!("confusion {:?}", m.confusion);

    let json = model.to_json()?;
    let back = LinearModel::from_json(&json)?;
    assert_eq!(back.scores(&xte), model.scores(&xte));
    println!("model JSON: {} bytes, config hash {}", json.len(), model.config_hash);
    Ok(())
}
