//! Train the convolutional text classifier. Uses GloVe vectors from
//! `GLOVE_PATH` (with `GLOVE_DIM`, default 50) when set, seeded random
//! vectors otherwise.

use std::collections::{BTreeSet, HashSet};

use constructive::cnn::{load_embeddings, CnnModel, CnnTrainConfig, EmbeddingTable};
use constructive::corpus::{label_all, split_train_test, Label};
use constructive::features::tokenize::tokenize;
use constructive::synthetic::{synthetic_corpus, SyntheticConfig};

fn main() -> constructive::Result<()> {
    let corpus = label_all(synthetic_corpus(&SyntheticConfig {
        n_comments: 1500,
        ..SyntheticConfig::default()
    }));
    let (train, test) = split_train_test(&corpus, 0.2, 42)?;
    let docs = |c: &[constructive::corpus::LabeledComment]| -> Vec<Vec<String>> {
        c.iter().map(|c| tokenize(c.text()).word_tokens).collect()
    };
    let (dtr, dte) = (docs(&train), docs(&test));
    let table = match std::env::var_os("GLOVE_PATH") {
        Some(p) => {
            let dim = std::env::var("GLOVE_DIM").ok().and_then(|d| d.parse().ok()).unwrap_or(50);
            let keep: HashSet<String> = dtr.iter().chain(&dte).flatten().flat_map(|t| [t.clone(), t.to_lowercase()]).collect();
            load_embeddings(p, dim, Some(&keep))?
        }
        None => {
            let vocab: BTreeSet<&str> = dtr.iter().flatten().map(String::as_str).collect();
            EmbeddingTable::random(vocab, 32, 42)?
        }
    };
    let cov = table.coverage(dte.iter().map(Vec::as_slice));
    println!("test coverage: {:.1}% of tokens", 100.0 * cov.token_rate());
    let cfg = CnnTrainConfig {
        filters_per_width: 32,
        epochs: 4,
        ..CnnTrainConfig::default()
    };
    let labels: Vec<Label> = train.iter().map(|c| c.label).collect();
    let (model, log) = CnnModel::train(&dtr, &labels, table, &cfg)?;
    for e in &log {
        println!("epoch {}: loss {:.4}, train accuracy {:.4}", e.epoch, e.mean_loss, e.train_accuracy);
    }
    let gold: Vec<Label> = test.iter().map(|c| c.label).collect();
    let m = model.evaluate(&dte, &gold)?;
    println!("test F1 {:.4}", m.f1);
    Ok(())
}
