//! Held-out task metrics and post-hoc attribute attacks on frozen embeddings.

mod metrics;
mod probe;
mod report;

pub use metrics::{accuracy, auc, cross_entropy, macro_auc, macro_f1, mae, rmse};
pub use probe::{train_probe, Probe, ProbeConfig};
pub use report::{attack_embeddings, evaluate, AttackMetrics, MetricsReport};

use thiserror::Error;

use crate::autodiff::AutodiffError;
use crate::models::ModelError;
use crate::train::TrainError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{0}")]
    Contract(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Train(#[from] TrainError),
}
