//! Linear classifiers and classification metrics.

pub mod logreg;
pub mod metrics;
pub mod sgd;

pub use logreg::{train_logreg_standardized, LogRegConfig, LogRegResult};
pub use metrics::{evaluate_labels, Confusion, Metrics};
pub use sgd::{train, LinearModel, Loss, TrainConfig};
