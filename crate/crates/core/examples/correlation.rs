//! Constructiveness against toxicity, agreement and length.

use constructive::analysis::correlation_study;
use constructive::corpus::label_all;
use constructive::synthetic::{synthetic_corpus, SyntheticConfig};

fn main() -> constructive::Result<()> {
    let corpus = label_all(synthetic_corpus(&SyntheticConfig::default()));
    let r = correlation_study(&corpus, "toxicity")?;
    for s in &r.toxicity {
        println!("toxicity {:<14} {:?} (n = {})", s.statistic, s.value, s.n);
    }
    if let Some(a) = &r.agree {
        println!("agree    {:<14} {:?}", a.statistic, a.value);
    }
    if let Some(l) = &r.label_length {
        println!("length   {:<14} {:?}", l.statistic, l.value);
    }
    Ok(())
}
