use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use super::{Attribute, Graph, GraphError, NodeTargets};
use crate::autodiff::Tensor;
use crate::config::{parse_bool, parse_value, KeyValueSection};
use crate::rng::{stream, Stream};

/// Two-level stochastic block model with a sensitive attribute correlated to the block.
#[derive(Clone, Debug, PartialEq)]
pub struct SbmConfig {
    pub block_count: usize,
    pub nodes_per_block: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// With probability `rho` the attribute copies the block label, otherwise it
    /// is drawn uniformly from all classes.
    pub rho: f64,
    pub feature_noise: f64,
    /// Emit per-edge real targets (for link/rating tasks).
    pub edge_targets: bool,
    pub rating_noise: f64,
    pub seed: u64,
}

impl Default for SbmConfig {
    fn default() -> Self {
        Self {
            block_count: 2,
            nodes_per_block: 200,
            p_in: 0.005,
            p_out: 0.0005,
            rho: 0.6,
            feature_noise: 0.1,
            edge_targets: false,
            rating_noise: 0.1,
            seed: 0,
        }
    }
}

impl SbmConfig {
    pub fn validate(&self) -> Result<(), GraphError> {
        let bad = |m: String| Err(GraphError::Contract(m));
        if self.block_count < 2 {
            return bad(format!(
                "block_count must be >= 2, got {}",
                self.block_count
            ));
        }
        if self.nodes_per_block == 0 {
            return bad("nodes_per_block must be positive".into());
        }
        if !(0.0 <= self.p_out && self.p_out <= self.p_in && self.p_in <= 1.0) {
            return bad(format!(
                "need 0 <= p_out <= p_in <= 1, got p_in={} p_out={}",
                self.p_in, self.p_out
            ));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [0,1], got {}", self.rho));
        }
        if !(self.feature_noise >= 0.0) || !(self.rating_noise >= 0.0) {
            return bad("noise levels must be non-negative".into());
        }
        Ok(())
    }
}

impl KeyValueSection for SbmConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<bool, String> {
        match key {
            "block_count" => self.block_count = parse_value(value)?,
            "nodes_per_block" => self.nodes_per_block = parse_value(value)?,
            "p_in" => self.p_in = parse_value(value)?,
            "p_out" => self.p_out = parse_value(value)?,
            "rho" => self.rho = parse_value(value)?,
            "feature_noise" => self.feature_noise = parse_value(value)?,
            "edge_targets" => self.edge_targets = parse_bool(value)?,
            "rating_noise" => self.rating_noise = parse_value(value)?,
            "seed" => self.seed = parse_value(value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

/// Samples a graph. Blocks define the node target; features are
/// `one_hot(A) ++ one_hot(Y)` plus Gaussian noise.
pub fn generate_sbm(cfg: &SbmConfig) -> Result<Graph, GraphError> {
    cfg.validate()?;
    let mut rng = stream(cfg.seed, Stream::Graph);
    let k = cfg.block_count;
    let n = k * cfg.nodes_per_block;
    let blocks: Vec<usize> = (0..n).map(|v| v / cfg.nodes_per_block).collect();
    let sensitive: Vec<usize> = blocks
        .iter()
        .map(|&y| {
            if rng.random::<f64>() < cfg.rho {
                y
            } else {
                rng.random_range(0..k)
            }
        })
        .collect();

    let noise = Normal::new(0.0, cfg.feature_noise).expect("validated noise");
    let mut feats = Vec::with_capacity(n * 2 * k);
    for v in 0..n {
        for c in 0..k {
            let base = if sensitive[v] == c { 1.0 } else { 0.0 };
            feats.push(
                base + if cfg.feature_noise > 0.0 {
                    noise.sample(&mut rng)
                } else {
                    0.0
                },
            );
        }
        for c in 0..k {
            let base = if blocks[v] == c { 1.0 } else { 0.0 };
            feats.push(
                base + if cfg.feature_noise > 0.0 {
                    noise.sample(&mut rng)
                } else {
                    0.0
                },
            );
        }
    }

    let rating = Normal::new(0.0, cfg.rating_noise).expect("validated noise");
    let mut edges = Vec::new();
    let mut targets = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if blocks[u] == blocks[v] {
                cfg.p_in
            } else {
                cfg.p_out
            };
            if rng.random::<f64>() < p {
                edges.push((u, v));
                if cfg.edge_targets {
                    let base = 1.0
                        + f64::from(u8::from(blocks[u] == blocks[v]))
                        + 0.5 * f64::from(u8::from(sensitive[u] == sensitive[v]));
                    let eps = if cfg.rating_noise > 0.0 {
                        rating.sample(&mut rng)
                    } else {
                        0.0
                    };
                    targets.push(base + eps);
                }
            }
        }
    }

    Graph::new(
        Tensor::matrix(n, 2 * k, feats),
        &edges,
        cfg.edge_targets.then_some(targets),
        vec![Attribute::new("sensitive", sensitive, k)?],
        Some(NodeTargets::Categorical {
            labels: blocks,
            classes: k,
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_correlation_copies_block() {
        let cfg = SbmConfig {
            rho: 1.0,
            feature_noise: 0.0,
            nodes_per_block: 30,
            ..SbmConfig::default()
        };
        let g = generate_sbm(&cfg).unwrap();
        let Some(NodeTargets::Categorical { labels, .. }) = g.node_targets() else {
            panic!("categorical targets expected")
        };
        assert_eq!(&g.sensitive()[0].labels, labels);
        assert_eq!(g.features().row(0), &[1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = SbmConfig {
            seed: 9,
            edge_targets: true,
            ..SbmConfig::default()
        };
        assert_eq!(generate_sbm(&cfg).unwrap(), generate_sbm(&cfg).unwrap());
        let other = SbmConfig {
            seed: 10,
            ..cfg.clone()
        };
        assert_ne!(generate_sbm(&cfg).unwrap(), generate_sbm(&other).unwrap());
    }

    #[test]
    fn within_block_edge_count_matches_binomial() {
        let cfg = SbmConfig {
            nodes_per_block: 100,
            p_in: 0.1,
            p_out: 0.01,
            seed: 3,
            ..SbmConfig::default()
        };
        let g = generate_sbm(&cfg).unwrap();
        let within = g
            .edges()
            .iter()
            .filter(|&&(u, v)| u / 100 == v / 100)
            .count() as f64;
        let trials = 2.0 * (100.0 * 99.0 / 2.0);
        let mean = trials * 0.1;
        let sd = (trials * 0.1 * 0.9f64).sqrt();
        assert!((mean - 990.0).abs() < 1e-9);
        assert!((within - mean).abs() <= 3.0 * sd, "within = {within}");
    }

    #[test]
    fn rejects_bad_config() {
        assert!(generate_sbm(&SbmConfig {
            p_out: 0.5,
            p_in: 0.1,
            ..SbmConfig::default()
        })
        .is_err());
        assert!(generate_sbm(&SbmConfig {
            rho: 1.5,
            ..SbmConfig::default()
        })
        .is_err());
        assert!(generate_sbm(&SbmConfig {
            block_count: 1,
            ..SbmConfig::default()
        })
        .is_err());
    }
}
