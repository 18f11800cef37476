//! Per-group ablation and cross-corpus transfer. The second corpus is a
//! differently seeded synthetic one with no aux score columns, so aux
//! groups are reported as unavailable.

use constructive::analysis::{domain_transfer, feature_ablation, AblationGroup, FeatureSplit};
use constructive::corpus::{label_all, split_train_test, Label};
use constructive::features::{FeatureConfig, FeatureExtractor};
use constructive::linear::TrainConfig;
use constructive::synthetic::{synthetic_corpus, SyntheticConfig};

fn main() -> constructive::Result<()> {
    let a = label_all(synthetic_corpus(&SyntheticConfig::default()));
    let (train, test) = split_train_test(&a, 0.2, 42)?;
    let fx = FeatureExtractor::fit(&train, &FeatureConfig::default())?;
    let (trv, tev) = (fx.extract_all(&train)?, fx.extract_all(&test)?);
    let (ytr, yte): (Vec<Label>, Vec<Label>) = (train.iter().map(|c| c.label).collect(), test.iter().map(|c| c.label).collect());
    let split = FeatureSplit {
        extractor: &fx,
        train: &trv,
        train_labels: &ytr,
        test: &tev,
        test_labels: &yte,
    };
    let cells = AblationGroup::standard();
    println!("ablation");
    for c in feature_ablation(&split, &cells, &TrainConfig::default()) {
        println!("  {:<16} {}", c.group, c.f1.map_or_else(|| c.skipped.unwrap_or_default(), |f| format!("{f:.4}")));
    }

    let b = label_all(synthetic_corpus(&SyntheticConfig {
        seed: 7,
        with_aux_scores: false,
        ..SyntheticConfig::default()
    }));
    println!("transfer a -> b");
    for c in domain_transfer(("a", &train), ("b", &b), &FeatureConfig::default(), &cells, &TrainConfig::default())? {
        println!("  {:<16} {:>8} {}", c.model, c.f1.map_or("NA".into(), |f| format!("{f:.4}")), c.status);
    }
    Ok(())
}
