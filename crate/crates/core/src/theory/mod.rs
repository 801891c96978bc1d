//! Information-theoretic quantities and bound checkers on small discrete instances.

mod bounds;
mod dist;
mod entropy;
pub mod random;
mod wasserstein;

pub use bounds::{
    check_leakage_bound, check_tradeoff_bound, empirical_lipschitz, BoundInstance, LeakageRecord,
    TradeoffRecord, BOUND_TOL, LIPSCHITZ_GRID,
};
pub use dist::{
    advantage_bruteforce, check_error_decomposition, euclidean, min_error_sum, tv_distance,
    DiscreteDist, MAX_ENUMERATED_SUPPORT, NORMALIZATION_TOL,
};
pub use entropy::{binary_entropy_bits, conditional_entropy_bits, inv_entropy_lower_bound};
pub use wasserstein::{
    estimate_w1_embeddings, transport_cost, w1_bernoulli, w1_discrete, w1_sorted_1d,
    MAX_TRANSPORT_SUPPORT,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error("{0}")]
    Contract(String),
}
