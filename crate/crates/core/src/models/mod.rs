//! Message-passing encoder, bilinear edge decoder and MLP heads.

mod encoder;
mod heads;
mod params;

pub use encoder::{
    aggregation_operator, dense_reference_encode, encode, encode_values, Aggregation,
    EmbeddingTable, EncoderConfig, Nonlinearity,
};
pub use heads::{
    bilinear_scores, decode_edge, head_forward, HeadConfig, TaskHead, DEFAULT_LEAKY_SLOPE,
};
pub use params::{init_head, init_params, ModelParams, ModelSpec, ParamGroup};

use thiserror::Error;

use crate::autodiff::AutodiffError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("missing parameter {0}")]
    MissingParam(String),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}
