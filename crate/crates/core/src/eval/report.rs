use rayon::prelude::*;
use serde_json::{Map, Value};

use super::metrics::{macro_auc, macro_f1, mae, rmse};
use super::probe::{train_probe, ProbeConfig};
use super::EvalError;
use crate::autodiff::{softmax_rows, Tape};
use crate::graph::{Graph, NodeTargets};
use crate::models::{decode_edge, encode_values, head_forward, EmbeddingTable, ModelParams};
use crate::rng::{substream, Stream};
use crate::train::{pair_subset, Pairing, TaskKind, TaskSplit, TrainingConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct AttackMetrics {
    pub attribute: String,
    pub mode: String,
    pub macro_f1: f64,
    /// Only for binary attributes.
    pub auc: Option<f64>,
    /// Macro-F1 of always predicting the most frequent training label.
    pub majority_f1: f64,
    pub train_pairs: usize,
    pub test_pairs: usize,
    pub warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    /// `auc` for node tasks, `rmse` for link tasks.
    pub task_metric: &'static str,
    pub task_value: Option<f64>,
    pub task_mae: Option<f64>,
    pub attacks: Vec<AttackMetrics>,
    pub train_nodes: usize,
    pub test_nodes: usize,
    pub lambda: f64,
    pub seed: u64,
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

impl MetricsReport {
    /// One flat JSON object; attack fields are keyed `attribute/mode/metric`.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("task_metric".into(), Value::from(self.task_metric));
        m.insert(
            "task_value".into(),
            self.task_value.map_or(Value::Null, num),
        );
        if let Some(v) = self.task_mae {
            m.insert("task_mae".into(), num(v));
        }
        m.insert("train_nodes".into(), Value::from(self.train_nodes));
        m.insert("test_nodes".into(), Value::from(self.test_nodes));
        m.insert("lambda".into(), num(self.lambda));
        m.insert("seed".into(), Value::from(self.seed));
        for a in &self.attacks {
            let key = |k: &str| format!("{}/{}/{k}", a.attribute, a.mode);
            m.insert(key("macro_f1"), num(a.macro_f1));
            if let Some(v) = a.auc {
                m.insert(key("auc"), num(v));
            }
            m.insert(key("majority_f1"), num(a.majority_f1));
            m.insert(key("train_pairs"), Value::from(a.train_pairs));
            m.insert(key("test_pairs"), Value::from(a.test_pairs));
            if let Some(w) = &a.warning {
                m.insert(key("warning"), Value::from(w.as_str()));
            }
        }
        Value::Object(m)
    }

    pub fn attack(&self, attribute: &str, mode: &str) -> Option<&AttackMetrics> {
        self.attacks
            .iter()
            .find(|a| a.attribute == attribute && a.mode == mode)
    }
}

fn task_metric(
    g: &Graph,
    split: &TaskSplit,
    z: &EmbeddingTable,
    params: &ModelParams,
) -> Result<(&'static str, Option<f64>, Option<f64>), EvalError> {
    match split.task {
        TaskKind::Node => {
            let Some(NodeTargets::Categorical { labels, classes }) = g.node_targets() else {
                return Err(EvalError::Contract(
                    "node task needs categorical node targets".into(),
                ));
            };
            let test = &split.nodes.test;
            let mut tape = Tape::new();
            let vars = params.register_frozen(&mut tape);
            let zt = tape.constant(z.tensor().clone());
            let rows = tape.gather_rows(zt, test.clone())?;
            let logits = head_forward(&mut tape, rows, &vars, "task")?;
            let probs = softmax_rows(tape.value(logits));
            let probs: Vec<Vec<f64>> = (0..test.len()).map(|i| probs.row(i).to_vec()).collect();
            let truth: Vec<usize> = test.iter().map(|&v| labels[v]).collect();
            Ok(("auc", macro_auc(&probs, &truth, *classes)?, None))
        }
        TaskKind::Link => {
            let edges = split
                .edges
                .as_ref()
                .ok_or_else(|| EvalError::Contract("link task needs an edge split".into()))?;
            let targets = g
                .edge_targets()
                .ok_or_else(|| EvalError::Contract("link task needs edge targets".into()))?;
            let b = params.get("task/bilinear/B")?;
            let preds: Vec<f64> = edges
                .test
                .iter()
                .map(|&i| {
                    let (u, v) = g.edges()[i];
                    decode_edge(z.row(u), z.row(v), b)
                })
                .collect();
            let truth: Vec<f64> = edges.test.iter().map(|&i| targets[i]).collect();
            Ok((
                "rmse",
                Some(rmse(&preds, &truth)?),
                Some(mae(&preds, &truth)?),
            ))
        }
    }
}

/// Train pairs use train nodes on both sides; test pairs start at a test node
/// and may end anywhere.
fn probe_pairings(
    g: &Graph,
    split: &TaskSplit,
    cfg: &ProbeConfig,
    job: u64,
) -> Result<(Pairing, Pairing), EvalError> {
    let mut rng = substream(cfg.seed, Stream::Sampler, job);
    let mask = split.nodes.train_mask(g.node_count());
    let mut train = pair_subset(g, &split.nodes.train, cfg.attack_mode, &mut rng)?;
    train.retain_targets(|w| mask[w]);
    let test = pair_subset(g, &split.nodes.test, cfg.attack_mode, &mut rng)?;
    Ok((train, test))
}

/// Attacks the frozen embeddings `z` with one probe per attribute and config.
pub fn attack_embeddings(
    g: &Graph,
    split: &TaskSplit,
    z: &EmbeddingTable,
    probes: &[ProbeConfig],
) -> Result<Vec<AttackMetrics>, EvalError> {
    let jobs: Vec<(usize, usize)> = (0..g.sensitive().len())
        .flat_map(|a| (0..probes.len()).map(move |p| (a, p)))
        .collect();
    jobs.par_iter()
        .map(|&(a, p)| {
            let attr = &g.sensitive()[a];
            let cfg = &probes[p];
            let (train_pairs, test_pairs) = probe_pairings(g, split, cfg, a as u64)?;
            if train_pairs.is_empty() || test_pairs.is_empty() {
                return Err(EvalError::Contract(format!(
                    "{} probe for {} has no usable pairs",
                    cfg.attack_mode, attr.name
                )));
            }
            let probe = train_probe(z, &attr.labels, attr.classes, &train_pairs, cfg)?;
            let rows = test_pairs.sources();
            let truth: Vec<usize> = test_pairs
                .targets()
                .iter()
                .map(|&w| attr.labels[w])
                .collect();
            let probs = probe.predict_proba(z, &rows)?;
            let pred: Vec<usize> = probe.predict(z, &rows)?;
            let mut counts = vec![0usize; attr.classes];
            train_pairs
                .targets()
                .iter()
                .for_each(|&w| counts[attr.labels[w]] += 1);
            let majority =
                (0..attr.classes).fold(0, |b, c| if counts[c] > counts[b] { c } else { b });
            let auc = if attr.classes == 2 {
                macro_auc(&probs, &truth, 2)?
            } else {
                None
            };
            Ok(AttackMetrics {
                attribute: attr.name.clone(),
                mode: cfg.attack_mode.to_string(),
                macro_f1: macro_f1(&pred, &truth, attr.classes)?,
                auc,
                majority_f1: macro_f1(&vec![majority; truth.len()], &truth, attr.classes)?,
                train_pairs: train_pairs.len(),
                test_pairs: test_pairs.len(),
                warning: probe.warning,
            })
        })
        .collect()
}

/// Task metric on the held-out split plus one probe attack per attribute and config.
pub fn evaluate(
    g: &Graph,
    split: &TaskSplit,
    cfg: &TrainingConfig,
    params: &ModelParams,
    probes: &[ProbeConfig],
) -> Result<MetricsReport, EvalError> {
    let z = encode_values(g, params, &cfg.encoder)?;
    let (task_metric, task_value, task_mae) = task_metric(g, split, &z, params)?;
    Ok(MetricsReport {
        task_metric,
        task_value,
        task_mae,
        attacks: attack_embeddings(g, split, &z, probes)?,
        train_nodes: split.nodes.train.len(),
        test_nodes: split.nodes.test.len(),
        lambda: cfg.lambda,
        seed: cfg.seed,
    })
}
