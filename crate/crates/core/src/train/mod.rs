//! Minimax training of an encoder against a simulated attribute adversary.

mod config;
mod history;
mod losses;
mod optim;
mod pairing;
mod run;

pub use config::{AttackMode, Distance, OptimizerKind, TaskKind, TrainingConfig};
pub use history::{checkpoint_csv, parse_checkpoint, StepKind, StepRecord, TrainHistory};
pub use losses::{
    adversary_loss_tv, adversary_loss_wasserstein, task_loss_classification, task_loss_mse,
};
pub use optim::{clip_params, Optimizer};
pub use pairing::{pair_nodes, pair_subset, Pairing};
pub use run::{model_spec, train, train_observed, TaskSplit, TrainOutcome};

use thiserror::Error;

use crate::autodiff::AutodiffError;
use crate::graph::GraphError;
use crate::models::{ModelError, ModelParams};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("{0}")]
    Contract(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// Non-finite loss or update. Carries the parameters from before the failing step.
    #[error("training aborted at iteration {iteration}: {message}")]
    Aborted {
        iteration: usize,
        message: String,
        last_good: Box<ModelParams>,
        history: Box<TrainHistory>,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}
