//! Inter-annotator agreement on per-annotator judgements: Krippendorff's
//! alpha per batch and the controversial-pair experiment.

use std::collections::BTreeMap;

use constructive::agreement::{controversial_pairs, krippendorff_alpha_nominal, mean_alpha, percentage_agreement, RatingMatrix};
use constructive::corpus::annotations::AgreeMapping;
use constructive::synthetic::{synthetic_annotations, SyntheticConfig};

fn main() -> constructive::Result<()> {
    let ann = synthetic_annotations(&SyntheticConfig::default());
    let mut batches: BTreeMap<String, Vec<_>> = BTreeMap::new();
    for a in &ann {
        batches.entry(a.batch.clone().unwrap_or_default()).or_default().push(a);
    }
    let matrices: Vec<RatingMatrix> = batches
        .values()
        .map(|b| RatingMatrix::from_annotations(b.iter().copied()))
        .collect();
    for (name, m) in batches.keys().zip(&matrices) {
        let a = krippendorff_alpha_nominal(m)?;
        println!("batch {name}: alpha {:?} over {} units", a.alpha.value(), a.units_used);
    }
    let (mean, n) = mean_alpha(&matrices)?;
    println!("mean alpha over {n} batches: {:?}", mean.value());

    let pairs = controversial_pairs(&ann, &AgreeMapping::default(), 42);
    println!(
        "controversial pairs: {}, agreement {:.4}",
        pairs.pairs.len(),
        percentage_agreement(&pairs)?
    );
    Ok(())
}
