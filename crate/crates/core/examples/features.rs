//! Extract every feature group for a few comments.

use constructive::corpus::{label_all, RawComment};
use constructive::features::{FeatureConfig, FeatureExtractor};

fn main() -> constructive::Result<()> {
    let texts = [
        "I think the city should fund transit because the data clearly shows ridership growth in Toronto.",
        "LOL what a joke!!!",
        "When I lived in Ottawa we tried this. However, it failed; the evidence suggests a different approach.",
        "Stupid article.",
    ];
    let corpus = label_all(
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| RawComment::new(format!("c{i}"), *t, if i % 2 == 0 { 1.0 } else { 0.0 }))
            .collect(),
    );
    let config = FeatureConfig {
        min_df: 1,
        ..FeatureConfig::default()
    };
    let fx = FeatureExtractor::fit(&corpus, &config)?;
    println!("active groups: {:?}", fx.active_groups());
    println!("disabled: {:?}", fx.aux.disabled);
    println!("vocabulary: {} n-grams", fx.sparse_dim());
    let header = fx.dense_header();
    for (c, v) in corpus.iter().zip(fx.extract_all(&corpus)?) {
        let dense: Vec<f64> = fx
            .active_groups()
            .iter()
            .filter_map(|g| v.dense(*g))
            .flatten()
            .copied()
            .collect();
        println!("\n{}", c.text());
        for (name, x) in header.iter().zip(dense) {
            println!("  {name:<28} {x:.4}");
        }
    }
    Ok(())
}
