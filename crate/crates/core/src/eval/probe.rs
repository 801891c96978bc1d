use super::EvalError;
use crate::autodiff::{softmax_rows, Tape, Tensor};
use crate::config::{parse_value, KeyValueSection};
use crate::models::{head_forward, init_head, EmbeddingTable, HeadConfig, ModelParams, ParamGroup};
use crate::train::{AttackMode, Optimizer, OptimizerKind, Pairing};

const PREFIX: &str = "adversary/probe";

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub attack_mode: AttackMode,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            epochs: 200,
            learning_rate: 0.01,
            seed: 0,
            attack_mode: AttackMode::Node,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.hidden == 0 || self.epochs == 0 || !(self.learning_rate > 0.0) {
            return Err(EvalError::Contract(
                "probe hidden, epochs and learning_rate must be positive".into(),
            ));
        }
        Ok(())
    }
}

impl KeyValueSection for ProbeConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<bool, String> {
        match key {
            "probe_hidden" => self.hidden = parse_value(value)?,
            "probe_epochs" => self.epochs = parse_value(value)?,
            "probe_learning_rate" => self.learning_rate = parse_value(value)?,
            "probe_seed" => self.seed = parse_value(value)?,
            "probe_mode" => self.attack_mode = value.parse()?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

/// Fresh attacker trained on frozen embeddings. Inputs are standardised with
/// statistics of the training rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Probe {
    pub params: ModelParams,
    pub classes: usize,
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// Set when training labels had a single class.
    constant: Option<usize>,
    pub warning: Option<String>,
}

fn standardized(z: &EmbeddingTable, rows: &[usize], mean: &[f64], scale: &[f64]) -> Tensor {
    let d = z.dim();
    let mut data = Vec::with_capacity(rows.len() * d);
    for &v in rows {
        data.extend(
            z.row(v)
                .iter()
                .zip(mean.iter().zip(scale))
                .map(|(x, (m, s))| (x - m) / s),
        );
    }
    Tensor::matrix(rows.len(), d, data)
}

impl Probe {
    /// Class probabilities for the embeddings of `rows`.
    pub fn predict_proba(
        &self,
        z: &EmbeddingTable,
        rows: &[usize],
    ) -> Result<Vec<Vec<f64>>, EvalError> {
        if let Some(c) = self.constant {
            let mut p = vec![0.0; self.classes];
            p[c] = 1.0;
            return Ok(vec![p; rows.len()]);
        }
        if rows.is_empty() {
            return Ok(Vec::new());
        }
        let mut tape = Tape::new();
        let vars = self.params.register_frozen(&mut tape);
        let x = tape.constant(standardized(z, rows, &self.mean, &self.scale));
        let logits = head_forward(&mut tape, x, &vars, PREFIX)?;
        let probs = softmax_rows(tape.value(logits));
        Ok((0..rows.len()).map(|i| probs.row(i).to_vec()).collect())
    }

    pub fn predict(&self, z: &EmbeddingTable, rows: &[usize]) -> Result<Vec<usize>, EvalError> {
        Ok(self
            .predict_proba(z, rows)?
            .iter()
            .map(|p| (0..p.len()).fold(0, |b, c| if p[c] > p[b] { c } else { b }))
            .collect())
    }
}

/// Trains on `(z_v, labels[w])` for every pair `(v, w)`.
pub fn train_probe(
    z: &EmbeddingTable,
    labels: &[usize],
    classes: usize,
    pairs: &Pairing,
    cfg: &ProbeConfig,
) -> Result<Probe, EvalError> {
    cfg.validate()?;
    if classes < 2 {
        return Err(EvalError::Contract("probe needs at least 2 classes".into()));
    }
    if pairs.is_empty() {
        return Err(EvalError::Contract(
            "probe training pairing is empty".into(),
        ));
    }
    if pairs
        .pairs
        .iter()
        .any(|&(v, w)| v >= z.node_count() || w >= labels.len())
    {
        return Err(EvalError::Contract(
            "pairing refers to unknown nodes".into(),
        ));
    }
    let rows = pairs.sources();
    let y: Vec<usize> = pairs.targets().iter().map(|&w| labels[w]).collect();
    if y.iter().any(|&c| c >= classes) {
        return Err(EvalError::Contract("label out of range".into()));
    }
    let d = z.dim();
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for &v in &rows {
        z.row(v)
            .iter()
            .zip(mean.iter_mut())
            .for_each(|(x, m)| *m += x / n);
    }
    let mut scale = vec![0.0; d];
    for &v in &rows {
        z.row(v)
            .iter()
            .zip(&mean)
            .zip(scale.iter_mut())
            .for_each(|((x, m), s)| *s += (x - m) * (x - m) / n);
    }
    scale
        .iter_mut()
        .for_each(|s| *s = if *s > 1e-24 { s.sqrt() } else { 1.0 });

    let head = HeadConfig {
        hidden: cfg.hidden,
        out: classes,
    };
    let mut params = init_head(PREFIX, d, &head, cfg.seed)?;
    if y.iter().all(|&c| c == y[0]) {
        return Ok(Probe {
            params,
            classes,
            mean,
            scale,
            constant: Some(y[0]),
            warning: Some(format!(
                "probe training labels are all class {}; using a constant predictor",
                y[0]
            )),
        });
    }
    let x = standardized(z, &rows, &mean, &scale);
    let mut opt = Optimizer::new(OptimizerKind::ADAM_DEFAULT, &[ParamGroup::Adversary]);
    for _ in 0..cfg.epochs {
        let mut tape = Tape::new();
        let vars = params.register(&mut tape);
        let xv = tape.constant(x.clone());
        let logits = head_forward(&mut tape, xv, &vars, PREFIX)?;
        let loss = tape.softmax_cross_entropy(logits, y.clone())?;
        let grads = tape.backward(loss)?;
        opt.step(&mut params, &grads, cfg.learning_rate)
            .map_err(|e| EvalError::Numeric(e.to_string()))?;
    }
    Ok(Probe {
        params,
        classes,
        mean,
        scale,
        constant: None,
        warning: None,
    })
}
