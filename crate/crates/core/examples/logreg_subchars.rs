//! Logistic regression of the label on standardised sub-characteristic
//! counts, with Wald confidence intervals.

use constructive::corpus::{label_all, Label};
use constructive::linear::logreg::{subchar_design, write_coefficients_csv};
use constructive::linear::{train_logreg_standardized, LogRegConfig};
use constructive::synthetic::{synthetic_corpus, SyntheticConfig};

fn main() -> constructive::Result<()> {
    let corpus = label_all(synthetic_corpus(&SyntheticConfig::default()));
    let (x, names) = subchar_design(&corpus);
    let y: Vec<Label> = corpus.iter().map(|c| c.label).collect();
    let r = train_logreg_standardized(&x, &names, &y, &LogRegConfig::default())?;
    println!(
        "in-sample F1 {:.4}, iterations {}, converged {}, separable {}",
        r.in_sample.f1, r.iterations, r.converged, r.separable
    );
    write_coefficients_csv(std::io::stdout(), &r)?;
    Ok(())
}
