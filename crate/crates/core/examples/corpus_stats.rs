//! Aggregate a corpus into labels and print the label distribution.
//!
//! `cargo run --example corpus_stats [C3.csv text_col fraction_col]`
//! Without arguments a seeded synthetic corpus is used.

use constructive::corpus::{corpus_stats, label_all, load_c3_csv, split_train_test, ColumnMapping};
use constructive::synthetic::{synthetic_corpus, SyntheticConfig};

fn main() -> constructive::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let raw = match args.as_slice() {
        [path, text, fraction] => {
            let mapping = ColumnMapping::new([("text", text.as_str()), ("constructive_fraction", fraction.as_str())]);
            let report = load_c3_csv(path, &mapping)?;
            println!("skipped rows: {}", report.row_errors.len());
            report.items
        }
        _ => synthetic_corpus(&SyntheticConfig::default()),
    };
    let corpus = label_all(raw);
    let stats = corpus_stats(&corpus)?;
    println!("{}", serde_json::to_string_pretty(&stats)?);
    let (train, test) = split_train_test(&corpus, 0.2, 42)?;
    println!("train {} / test {}", train.len(), test.len());
    Ok(())
}
