use std::fmt;
use std::str::FromStr;

use super::TrainError;
use crate::config::{parse_bool, parse_list, parse_value, KeyValueSection};
use crate::models::{Aggregation, EncoderConfig, Nonlinearity};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Distance {
    /// Cross-entropy adversary.
    Tv,
    /// Clipped critic with group-mean score gap.
    Wasserstein,
}

/// Node pairing policy: which node's label is matched with `z_v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AttackMode {
    Node,
    Neighborhood,
    NHop(usize),
}

impl fmt::Display for AttackMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackMode::Node => f.write_str("node"),
            AttackMode::Neighborhood => f.write_str("neighborhood"),
            AttackMode::NHop(k) => write!(f, "nhop:{k}"),
        }
    }
}

impl FromStr for AttackMode {
    type Err = String;

    /// `node`, `neighborhood`, `nhop:K` or `nhop(K)`.
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "node" => return Ok(AttackMode::Node),
            "neighborhood" => return Ok(AttackMode::Neighborhood),
            _ => {}
        }
        let k = s
            .strip_prefix("nhop:")
            .or_else(|| s.strip_prefix("nhop(").and_then(|r| r.strip_suffix(')')))
            .ok_or_else(|| format!("unknown attack mode `{s}`"))?;
        let k: usize = parse_value(k)?;
        if k == 0 {
            return Err("nhop needs at least one hop".into());
        }
        Ok(AttackMode::NHop(k))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OptimizerKind {
    Sgd,
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
}

impl OptimizerKind {
    pub const ADAM_DEFAULT: OptimizerKind = OptimizerKind::Adam {
        beta1: 0.9,
        beta2: 0.999,
        epsilon: 1e-8,
    };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskKind {
    /// Classify node targets; metric is AUC.
    Node,
    /// Regress edge targets with bilinear scores; metric is RMSE.
    Link,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    /// Base rate of the adversary optimizer before scaling by `lambda`.
    pub adversary_learning_rate: f64,
    pub lambda: f64,
    pub batch_size: usize,
    /// One adversary step whenever `t % adversary_cadence == 0`.
    pub adversary_cadence: usize,
    pub distance: Distance,
    pub clip: f64,
    pub attack_mode: AttackMode,
    pub pretrain_iters: usize,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    /// When false, adversary iterations are no-ops (task steps are unchanged).
    pub adversary_enabled: bool,
    /// Store wall-clock milliseconds in the history; off keeps outputs reproducible.
    pub record_timing: bool,
    pub task: TaskKind,
    pub test_fraction: f64,
    pub encoder: EncoderConfig,
    pub task_hidden: usize,
    pub adversary_hidden: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            iterations: 200,
            learning_rate: 0.01,
            adversary_learning_rate: 0.01,
            lambda: 1.0,
            batch_size: 20_000,
            adversary_cadence: 2,
            distance: Distance::Tv,
            clip: 0.01,
            attack_mode: AttackMode::Node,
            pretrain_iters: 0,
            optimizer: OptimizerKind::ADAM_DEFAULT,
            seed: 0,
            adversary_enabled: true,
            record_timing: false,
            task: TaskKind::Node,
            test_fraction: 0.2,
            encoder: EncoderConfig::default(),
            task_hidden: 64,
            adversary_hidden: 64,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::Config(m));
        if self.iterations < 1 {
            return bad("iterations must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if !(self.adversary_learning_rate > 0.0 && self.adversary_learning_rate.is_finite()) {
            return bad(format!(
                "adversary_learning_rate must be positive, got {}",
                self.adversary_learning_rate
            ));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if self.batch_size < 1 {
            return bad("batch_size must be >= 1".into());
        }
        if self.adversary_cadence < 1 {
            return bad("adversary_cadence must be >= 1".into());
        }
        if self.distance == Distance::Wasserstein && !(self.clip > 0.0) {
            return bad(format!(
                "clip must be positive for wasserstein, got {}",
                self.clip
            ));
        }
        if let OptimizerKind::Adam {
            beta1,
            beta2,
            epsilon,
        } = self.optimizer
        {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || !(epsilon > 0.0) {
                return bad("adam needs beta1, beta2 in [0,1) and epsilon > 0".into());
            }
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!(
                "test_fraction must lie in (0,1), got {}",
                self.test_fraction
            ));
        }
        if self.task_hidden == 0 || self.adversary_hidden == 0 {
            return bad("head widths must be positive".into());
        }
        self.encoder
            .validate()
            .map_err(|e| TrainError::Config(e.to_string()))
    }

    /// Parses a complete config; unknown keys are errors.
    pub fn from_text(text: &str) -> Result<Self, TrainError> {
        let mut cfg = Self::default();
        crate::config::apply(text, &mut [&mut cfg])
            .map_err(|e| TrainError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every key with its current value, in a form `from_text` reads back.
    pub fn to_text(&self) -> String {
        let mut lines = vec![
            format!("iterations = {}", self.iterations),
            format!("learning_rate = {:?}", self.learning_rate),
            format!(
                "adversary_learning_rate = {:?}",
                self.adversary_learning_rate
            ),
            format!("lambda = {:?}", self.lambda),
            format!("batch_size = {}", self.batch_size),
            format!("adversary_cadence = {}", self.adversary_cadence),
            format!(
                "distance = {}",
                match self.distance {
                    Distance::Tv => "tv",
                    Distance::Wasserstein => "wasserstein",
                }
            ),
            format!("clip = {:?}", self.clip),
            format!("attack_mode = {}", self.attack_mode),
            format!("pretrain_iters = {}", self.pretrain_iters),
        ];
        match self.optimizer {
            OptimizerKind::Sgd => lines.push("optimizer = sgd".into()),
            OptimizerKind::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                lines.push("optimizer = adam".into());
                lines.push(format!("beta1 = {beta1:?}"));
                lines.push(format!("beta2 = {beta2:?}"));
                lines.push(format!("epsilon = {epsilon:?}"));
            }
        }
        let e = &self.encoder;
        let dims: Vec<String> = e.hidden_dims.iter().map(usize::to_string).collect();
        lines.extend([
            format!("seed = {}", self.seed),
            format!("adversary_enabled = {}", self.adversary_enabled),
            format!("record_timing = {}", self.record_timing),
            format!(
                "task = {}",
                match self.task {
                    TaskKind::Node => "node",
                    TaskKind::Link => "link",
                }
            ),
            format!("test_fraction = {:?}", self.test_fraction),
            format!("layers = {}", e.layer_count),
            format!("hidden_dims = {}", dims.join(",")),
            format!("embedding_dim = {}", e.embedding_dim),
            format!(
                "aggregation = {}",
                match e.aggregation {
                    Aggregation::Mean => "mean",
                    Aggregation::Sum => "sum",
                }
            ),
            format!(
                "nonlinearity = {}",
                match e.nonlinearity {
                    Nonlinearity::LeakyRelu => "leaky_relu",
                    Nonlinearity::Relu => "relu",
                    Nonlinearity::None => "none",
                }
            ),
            format!("include_self = {}", e.include_self),
            format!("task_hidden = {}", self.task_hidden),
            format!("adversary_hidden = {}", self.adversary_hidden),
        ]);
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    /// Adversary steps in the main loop: `ceil(iterations / adversary_cadence)`.
    pub fn adversary_steps(&self) -> usize {
        self.iterations.div_ceil(self.adversary_cadence)
    }
}

impl KeyValueSection for TrainingConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<bool, String> {
        match key {
            "iterations" => self.iterations = parse_value(value)?,
            "learning_rate" => self.learning_rate = parse_value(value)?,
            "adversary_learning_rate" => self.adversary_learning_rate = parse_value(value)?,
            "lambda" => self.lambda = parse_value(value)?,
            "batch_size" => self.batch_size = parse_value(value)?,
            "adversary_cadence" => self.adversary_cadence = parse_value(value)?,
            "distance" => {
                self.distance = match value {
                    "tv" => Distance::Tv,
                    "wasserstein" => Distance::Wasserstein,
                    _ => return Err(format!("expected tv or wasserstein, found `{value}`")),
                }
            }
            "clip" => self.clip = parse_value(value)?,
            "attack_mode" => self.attack_mode = value.parse()?,
            "pretrain_iters" => self.pretrain_iters = parse_value(value)?,
            "optimizer" => {
                self.optimizer = match (value, self.optimizer) {
                    ("sgd", _) => OptimizerKind::Sgd,
                    ("adam", adam @ OptimizerKind::Adam { .. }) => adam,
                    ("adam", OptimizerKind::Sgd) => OptimizerKind::ADAM_DEFAULT,
                    _ => return Err(format!("expected sgd or adam, found `{value}`")),
                }
            }
            "beta1" | "beta2" | "epsilon" => {
                let x: f64 = parse_value(value)?;
                let OptimizerKind::Adam {
                    beta1,
                    beta2,
                    epsilon,
                } = &mut self.optimizer
                else {
                    return Err("adam hyperparameters require optimizer = adam first".into());
                };
                match key {
                    "beta1" => *beta1 = x,
                    "beta2" => *beta2 = x,
                    _ => *epsilon = x,
                }
            }
            "seed" => self.seed = parse_value(value)?,
            "adversary_enabled" => self.adversary_enabled = parse_bool(value)?,
            "record_timing" => self.record_timing = parse_bool(value)?,
            "task" => {
                self.task = match value {
                    "node" => TaskKind::Node,
                    "link" => TaskKind::Link,
                    _ => return Err(format!("expected node or link, found `{value}`")),
                }
            }
            "test_fraction" => self.test_fraction = parse_value(value)?,
            "layers" => {
                // keep hidden_dims consistent; an explicit hidden_dims entry still wins
                let k: usize = parse_value(value)?;
                let fill = self
                    .encoder
                    .hidden_dims
                    .last()
                    .copied()
                    .unwrap_or(self.encoder.embedding_dim);
                self.encoder.hidden_dims.resize(k.saturating_sub(1), fill);
                self.encoder.layer_count = k;
            }
            "hidden_dims" => self.encoder.hidden_dims = parse_list(value)?,
            "embedding_dim" => self.encoder.embedding_dim = parse_value(value)?,
            "aggregation" => {
                self.encoder.aggregation = match value {
                    "mean" => Aggregation::Mean,
                    "sum" => Aggregation::Sum,
                    _ => return Err(format!("expected mean or sum, found `{value}`")),
                }
            }
            "nonlinearity" => {
                self.encoder.nonlinearity = match value {
                    "leaky_relu" => Nonlinearity::LeakyRelu,
                    "relu" => Nonlinearity::Relu,
                    "none" => Nonlinearity::None,
                    _ => {
                        return Err(format!(
                            "expected leaky_relu, relu or none, found `{value}`"
                        ))
                    }
                }
            }
            "include_self" => self.encoder.include_self = parse_bool(value)?,
            "task_hidden" => self.task_hidden = parse_value(value)?,
            "adversary_hidden" => self.adversary_hidden = parse_value(value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_keys() {
        let cfg = TrainingConfig::from_text(
            "iterations = 10\nlambda = 0.5\ndistance = wasserstein\nclip = 0.02\nattack_mode = nhop:3\n\
             optimizer = adam\nbeta1 = 0.5\nlayers = 1\nhidden_dims =\nembedding_dim = 8\ntask = link\n",
        )
        .unwrap();
        assert_eq!(cfg.iterations, 10);
        assert_eq!(cfg.distance, Distance::Wasserstein);
        assert_eq!(cfg.attack_mode, AttackMode::NHop(3));
        assert_eq!(
            cfg.optimizer,
            OptimizerKind::Adam {
                beta1: 0.5,
                beta2: 0.999,
                epsilon: 1e-8
            }
        );
        assert_eq!(cfg.encoder.layer_count, 1);
        assert_eq!(cfg.task, TaskKind::Link);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(TrainingConfig::from_text("iters = 3").is_err());
        assert!(TrainingConfig::from_text("lambda = -1").is_err());
        assert!(TrainingConfig::from_text("adversary_cadence = 0").is_err());
        assert!(TrainingConfig::from_text("distance = wasserstein\nclip = 0").is_err());
        assert!(TrainingConfig::from_text("attack_mode = nhop:0").is_err());
    }

    #[test]
    fn attack_mode_round_trips() {
        for m in [
            AttackMode::Node,
            AttackMode::Neighborhood,
            AttackMode::NHop(4),
        ] {
            assert_eq!(m.to_string().parse::<AttackMode>().unwrap(), m);
        }
        assert_eq!(
            "nhop(2)".parse::<AttackMode>().unwrap(),
            AttackMode::NHop(2)
        );
    }

    #[test]
    fn adversary_step_count() {
        let cfg = TrainingConfig {
            iterations: 7,
            adversary_cadence: 3,
            ..Default::default()
        };
        assert_eq!(cfg.adversary_steps(), 3);
    }

    #[test]
    fn text_snapshot_round_trips() {
        let cfg = TrainingConfig {
            lambda: 0.3,
            distance: Distance::Wasserstein,
            attack_mode: AttackMode::NHop(2),
            optimizer: OptimizerKind::Sgd,
            encoder: EncoderConfig {
                layer_count: 2,
                hidden_dims: vec![5],
                ..EncoderConfig::default()
            },
            ..TrainingConfig::default()
        };
        assert_eq!(TrainingConfig::from_text(&cfg.to_text()).unwrap(), cfg);
        let d = TrainingConfig::default();
        assert_eq!(TrainingConfig::from_text(&d.to_text()).unwrap(), d);
    }
}
