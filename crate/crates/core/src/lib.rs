//! Adversarial attribute obfuscation for graph neural network encoders.
//!
//! The crate trains message-passing encoders against a simulated attacker
//! (total-variation or Wasserstein adversary, node/neighborhood/n-hop
//! pairings), evaluates leakage with freshly trained probes, and checks the
//! accompanying information-theoretic bounds on small discrete instances.

pub mod autodiff;
pub mod cli;
pub mod config;
pub mod eval;
pub mod graph;
pub mod models;
pub mod rng;
pub mod theory;
pub mod train;
