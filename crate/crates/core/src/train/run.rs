use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::IndexedRandom;

use super::history::{StepKind, StepRecord, TrainHistory};
use super::losses::{
    adversary_loss_tv, adversary_loss_wasserstein, task_loss_classification, task_loss_mse,
};
use super::optim::{clip_params, Optimizer};
use super::pairing::pair_subset;
use super::{Distance, TaskKind, TrainError, TrainingConfig};
use crate::autodiff::{AutodiffError, SparseRows, Tape, Var};
use crate::graph::{split_edges, split_nodes, EdgeSplit, Graph, NodeSplit, NodeTargets};
use crate::models::{
    aggregation_operator, bilinear_scores, encode, head_forward, init_params, HeadConfig,
    ModelParams, ModelSpec, ParamGroup, TaskHead,
};
use crate::rng::{stream, Rng, Stream};

/// Train/test partitions for one run. The node split serves the node task and
/// every attribute adversary; the edge split exists only for link tasks.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskSplit {
    pub task: TaskKind,
    pub nodes: NodeSplit,
    pub edges: Option<EdgeSplit>,
}

impl TaskSplit {
    pub fn prepare(g: &Graph, cfg: &TrainingConfig) -> Result<Self, TrainError> {
        let nodes = split_nodes(g.node_count(), cfg.test_fraction, cfg.seed)?;
        let edges = match cfg.task {
            TaskKind::Node => None,
            TaskKind::Link => Some(split_edges(g, cfg.test_fraction, cfg.seed)?),
        };
        Ok(Self {
            task: cfg.task,
            nodes,
            edges,
        })
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub history: TrainHistory,
    pub spec: ModelSpec,
}

/// Architecture implied by the graph's targets and attributes.
pub fn model_spec(g: &Graph, cfg: &TrainingConfig) -> Result<ModelSpec, TrainError> {
    let task = match cfg.task {
        TaskKind::Node => match g.node_targets() {
            Some(NodeTargets::Categorical { classes, .. }) => TaskHead::Classifier(HeadConfig {
                hidden: cfg.task_hidden,
                out: *classes,
            }),
            Some(NodeTargets::Real(_)) => {
                return Err(TrainError::Contract(
                    "node task needs categorical node targets".into(),
                ))
            }
            None => return Err(TrainError::Contract("node task needs node targets".into())),
        },
        TaskKind::Link => {
            if g.edge_targets().is_none() {
                return Err(TrainError::Contract("link task needs edge targets".into()));
            }
            TaskHead::Bilinear
        }
    };
    let adversaries = g
        .sensitive()
        .iter()
        .map(|a| {
            let out = match cfg.distance {
                Distance::Tv => a.classes,
                Distance::Wasserstein => 1,
            };
            (
                a.name.clone(),
                HeadConfig {
                    hidden: cfg.adversary_hidden,
                    out,
                },
            )
        })
        .collect();
    Ok(ModelSpec {
        encoder: cfg.encoder.clone(),
        task,
        adversaries,
    })
}

fn register_groups(
    tape: &mut Tape,
    params: &ModelParams,
    groups: &[ParamGroup],
) -> BTreeMap<String, Var> {
    params
        .iter()
        .filter(|(k, _)| ParamGroup::of(k).is_some_and(|g| groups.contains(&g)))
        .map(|(k, v)| (k.clone(), tape.param(k.clone(), v.clone())))
        .collect()
}

/// `m` ids drawn without replacement from `pool`, or the whole pool when it is no larger.
fn batch(pool: &[usize], m: usize, rng: &mut Rng) -> Vec<usize> {
    if m >= pool.len() {
        return pool.to_vec();
    }
    let mut b: Vec<usize> = pool.choose_multiple(rng, m).copied().collect();
    b.sort_unstable();
    b
}

enum StepFailure {
    NonFinite(String),
    Other(TrainError),
}

impl From<TrainError> for StepFailure {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Numeric(m) => StepFailure::NonFinite(m),
            TrainError::Autodiff(AutodiffError::NonFinite { kind }) => {
                StepFailure::NonFinite(format!("non-finite value in {kind}"))
            }
            TrainError::Model(crate::models::ModelError::Autodiff(AutodiffError::NonFinite {
                kind,
            })) => StepFailure::NonFinite(format!("non-finite value in {kind}")),
            other => StepFailure::Other(other),
        }
    }
}

impl From<AutodiffError> for StepFailure {
    fn from(e: AutodiffError) -> Self {
        TrainError::from(e).into()
    }
}

impl From<crate::models::ModelError> for StepFailure {
    fn from(e: crate::models::ModelError) -> Self {
        TrainError::from(e).into()
    }
}

struct Trainer<'a> {
    g: &'a Graph,
    cfg: &'a TrainingConfig,
    op: Arc<SparseRows>,
    params: ModelParams,
    task_opt: Optimizer,
    adv_opt: Optimizer,
    task_rng: Rng,
    adv_rng: Rng,
    pair_rng: Rng,
    task_pool: Vec<usize>,
    task_labels: Vec<usize>,
    edge_targets: Vec<f64>,
    attr_pool: Vec<usize>,
    attr_mask: Vec<bool>,
}

impl Trainer<'_> {
    fn loss_value(tape: &Tape, loss: Var) -> Result<f64, StepFailure> {
        let v = tape.value(loss).item().expect("scalar loss");
        if v.is_finite() {
            Ok(v)
        } else {
            Err(StepFailure::NonFinite(format!("loss is {v}")))
        }
    }

    fn task_step(&mut self) -> Result<f64, StepFailure> {
        let mut tape = Tape::new();
        let vars = register_groups(
            &mut tape,
            &self.params,
            &[ParamGroup::Encoder, ParamGroup::Task],
        );
        let x = tape.constant(self.g.features().clone());
        let z = encode(&mut tape, &self.op, x, &vars, &self.cfg.encoder)?;
        let loss = match self.cfg.task {
            TaskKind::Node => {
                let b = batch(&self.task_pool, self.cfg.batch_size, &mut self.task_rng);
                let labels: Vec<usize> = b.iter().map(|&v| self.task_labels[v]).collect();
                let rows = tape.gather_rows(z, b)?;
                let logits = head_forward(&mut tape, rows, &vars, "task")?;
                task_loss_classification(&mut tape, logits, &labels)?
            }
            TaskKind::Link => {
                let b = batch(&self.task_pool, self.cfg.batch_size, &mut self.task_rng);
                let edges: Vec<(usize, usize)> = b.iter().map(|&i| self.g.edges()[i]).collect();
                let targets: Vec<f64> = b.iter().map(|&i| self.edge_targets[i]).collect();
                let bvar = vars["task/bilinear/B"];
                let scores = bilinear_scores(&mut tape, z, bvar, &edges)?;
                task_loss_mse(&mut tape, scores, &targets)?
            }
        };
        let value = Self::loss_value(&tape, loss)?;
        let grads = tape.backward(loss)?;
        self.task_opt
            .step(&mut self.params, &grads, self.cfg.learning_rate)?;
        Ok(value)
    }

    /// `Ok(None)` when the pairing is empty or no attribute has two classes in the batch.
    fn adversary_step(&mut self) -> Result<Option<f64>, StepFailure> {
        let b = batch(&self.attr_pool, self.cfg.batch_size, &mut self.adv_rng);
        let mut pairing = pair_subset(self.g, &b, self.cfg.attack_mode, &mut self.pair_rng)?;
        pairing.retain_targets(|w| self.attr_mask[w]);
        if pairing.is_empty() {
            return Ok(None);
        }
        let mut tape = Tape::new();
        let vars = register_groups(
            &mut tape,
            &self.params,
            &[ParamGroup::Encoder, ParamGroup::Adversary],
        );
        let x = tape.constant(self.g.features().clone());
        let z = encode(&mut tape, &self.op, x, &vars, &self.cfg.encoder)?;
        let zr = tape.grad_reverse(z, self.cfg.lambda)?;
        let rows = tape.gather_rows(zr, pairing.sources())?;
        let targets = pairing.targets();

        let mut objective: Option<Var> = None;
        let mut reported = 0.0;
        for attr in self.g.sensitive() {
            let labels: Vec<usize> = targets.iter().map(|&w| attr.labels[w]).collect();
            let out = head_forward(&mut tape, rows, &vars, &format!("adversary/{}", attr.name))?;
            let term = match self.cfg.distance {
                Distance::Tv => {
                    let l = adversary_loss_tv(&mut tape, out, &labels)?;
                    reported += tape.value(l).data()[0];
                    l
                }
                Distance::Wasserstein => {
                    let Some(gap) =
                        adversary_loss_wasserstein(&mut tape, out, &labels, attr.classes)?
                    else {
                        continue;
                    };
                    reported += tape.value(gap).data()[0];
                    // the critic ascends the gap; reversal makes the encoder descend it
                    tape.scale(gap, -1.0)?
                }
            };
            objective = Some(match objective {
                Some(acc) => tape.add(acc, term)?,
                None => term,
            });
        }
        let Some(objective) = objective else {
            return Ok(None);
        };
        Self::loss_value(&tape, objective)?;
        if !reported.is_finite() {
            return Err(StepFailure::NonFinite(format!(
                "adversary loss is {reported}"
            )));
        }
        let grads = tape.backward(objective)?;
        let rate = self.cfg.lambda * self.cfg.adversary_learning_rate;
        self.adv_opt.step(&mut self.params, &grads, rate)?;
        if self.cfg.distance == Distance::Wasserstein {
            clip_params(&mut self.params, ParamGroup::Adversary, self.cfg.clip);
        }
        Ok(Some(reported))
    }
}

pub fn train(
    g: &Graph,
    split: &TaskSplit,
    cfg: &TrainingConfig,
) -> Result<TrainOutcome, TrainError> {
    train_observed(g, split, cfg, |_, _| {})
}

/// Runs `pretrain_iters` task steps, then `iterations` steps in which
/// `t % adversary_cadence == 0` selects an adversary step. `observe` sees every
/// record together with the parameters right after that step.
pub fn train_observed(
    g: &Graph,
    split: &TaskSplit,
    cfg: &TrainingConfig,
    mut observe: impl FnMut(&StepRecord, &ModelParams),
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    if split.task != cfg.task {
        return Err(TrainError::Contract(
            "split was prepared for a different task".into(),
        ));
    }
    if g.sensitive().is_empty() {
        return Err(TrainError::Contract(
            "graph has no sensitive attribute".into(),
        ));
    }
    let spec = model_spec(g, cfg)?;
    let params = init_params(&spec, g.feature_dim(), cfg.seed)?;

    let n = g.node_count();
    if split
        .nodes
        .train
        .iter()
        .chain(&split.nodes.test)
        .any(|&v| v >= n)
    {
        return Err(TrainError::Contract(
            "node split refers to nodes outside the graph".into(),
        ));
    }
    let (task_pool, task_labels, edge_targets) = match cfg.task {
        TaskKind::Node => {
            let Some(NodeTargets::Categorical { labels, .. }) = g.node_targets() else {
                unreachable!("model_spec checked the targets")
            };
            (split.nodes.train.clone(), labels.clone(), Vec::new())
        }
        TaskKind::Link => {
            let edges = split
                .edges
                .as_ref()
                .ok_or_else(|| TrainError::Contract("link task needs an edge split".into()))?;
            if edges.train.iter().any(|&i| i >= g.edge_count()) {
                return Err(TrainError::Contract(
                    "edge split refers to missing edges".into(),
                ));
            }
            (
                edges.train.clone(),
                Vec::new(),
                g.edge_targets().expect("checked").to_vec(),
            )
        }
    };

    let mut t = Trainer {
        g,
        cfg,
        op: aggregation_operator(g, cfg.encoder.aggregation, cfg.encoder.include_self),
        params,
        task_opt: Optimizer::new(cfg.optimizer, &[ParamGroup::Encoder, ParamGroup::Task]),
        adv_opt: Optimizer::new(cfg.optimizer, &[ParamGroup::Encoder, ParamGroup::Adversary]),
        task_rng: stream(cfg.seed, Stream::TaskBatch),
        adv_rng: stream(cfg.seed, Stream::AdversaryBatch),
        pair_rng: stream(cfg.seed, Stream::Sampler),
        task_pool,
        task_labels,
        edge_targets,
        attr_pool: split.nodes.train.clone(),
        attr_mask: split.nodes.train_mask(n),
    };

    let mut history = TrainHistory::default();
    let mut idle_adversary_steps = 0;
    let total = cfg.pretrain_iters + cfg.iterations;
    for iter in 0..total {
        let adversarial =
            iter >= cfg.pretrain_iters && (iter - cfg.pretrain_iters) % cfg.adversary_cadence == 0;
        if adversarial && !cfg.adversary_enabled {
            continue;
        }
        let started = Instant::now();
        let snapshot = t.params.clone();
        let outcome = if adversarial {
            t.adversary_step().map(|l| (StepKind::Adversary, None, l))
        } else {
            t.task_step().map(|l| (StepKind::Task, Some(l), None))
        };
        let finite_params = t.params.iter().all(|(_, p)| p.is_finite());
        let failure = match outcome {
            Ok(step) if finite_params => Ok(step),
            Ok(_) => Err("parameters became non-finite".to_string()),
            Err(StepFailure::NonFinite(m)) => Err(m),
            Err(StepFailure::Other(e)) => return Err(e),
        };
        let (kind, task_loss, adv_loss) = match failure {
            Ok(step) => step,
            Err(message) => {
                return Err(TrainError::Aborted {
                    iteration: iter,
                    message,
                    last_good: Box::new(snapshot),
                    history: Box::new(history),
                })
            }
        };
        if kind == StepKind::Adversary && adv_loss.is_none() {
            idle_adversary_steps += 1;
        }
        let record = StepRecord {
            iter,
            kind,
            task_loss,
            adv_loss,
            lambda: cfg.lambda,
            ms: if cfg.record_timing {
                started.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            },
        };
        observe(&record, &t.params);
        history.records.push(record);
    }
    let adversary_steps = history.count(StepKind::Adversary);
    if adversary_steps > 0 && 2 * idle_adversary_steps >= adversary_steps {
        history.warnings.push(format!(
            "{idle_adversary_steps} of {adversary_steps} adversary steps had an empty pairing or a single attribute class"
        ));
    }
    Ok(TrainOutcome {
        params: t.params,
        history,
        spec,
    })
}
