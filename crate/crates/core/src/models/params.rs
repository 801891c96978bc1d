use std::collections::BTreeMap;

use rand::Rng as _;

use super::{EncoderConfig, HeadConfig, ModelError, TaskHead};
use crate::autodiff::{Tape, Tensor, Var};
use crate::rng::{stream, Stream};

/// Which player of the minimax game owns a parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamGroup {
    Encoder,
    Task,
    Adversary,
}

impl ParamGroup {
    pub fn of(path: &str) -> Option<Self> {
        match path.split('/').next()? {
            "encoder" => Some(ParamGroup::Encoder),
            "task" => Some(ParamGroup::Task),
            "adversary" => Some(ParamGroup::Adversary),
            _ => None,
        }
    }
}

/// Every architecture choice needed to build and initialise a model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub encoder: EncoderConfig,
    pub task: TaskHead,
    /// One adversary head per sensitive attribute: `(attribute name, head)`.
    pub adversaries: Vec<(String, HeadConfig)>,
}

/// Named weight tensors, partitioned by path prefix into encoder, task and adversary.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelParams {
    tensors: BTreeMap<String, Tensor>,
}

impl ModelParams {
    pub fn new() -> Self {
        Self::default()
    }

    /// Panics if the path has no known group prefix.
    pub fn insert(&mut self, path: impl Into<String>, t: Tensor) {
        let path = path.into();
        assert!(
            ParamGroup::of(&path).is_some(),
            "parameter path {path} has no group"
        );
        self.tensors.insert(path, t);
    }

    pub fn get(&self, path: &str) -> Result<&Tensor, ModelError> {
        self.tensors
            .get(path)
            .ok_or_else(|| ModelError::MissingParam(path.to_string()))
    }

    pub fn get_mut(&mut self, path: &str) -> Option<&mut Tensor> {
        self.tensors.get_mut(path)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.tensors.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Tensor)> {
        self.tensors.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn group(&self, group: ParamGroup) -> impl Iterator<Item = (&String, &Tensor)> {
        self.tensors
            .iter()
            .filter(move |(k, _)| ParamGroup::of(k) == Some(group))
    }

    /// Copy of the parameters owned by `group`.
    pub fn subset(&self, group: ParamGroup) -> BTreeMap<String, Tensor> {
        self.group(group)
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    pub fn as_map(&self) -> &BTreeMap<String, Tensor> {
        &self.tensors
    }

    /// Records every parameter as a trainable leaf.
    pub fn register(&self, tape: &mut Tape) -> BTreeMap<String, Var> {
        self.tensors
            .iter()
            .map(|(k, v)| (k.clone(), tape.param(k.clone(), v.clone())))
            .collect()
    }

    /// Records every parameter as a constant (no gradient flows).
    pub fn register_frozen(&self, tape: &mut Tape) -> BTreeMap<String, Var> {
        self.tensors
            .iter()
            .map(|(k, v)| (k.clone(), tape.constant(v.clone())))
            .collect()
    }
}

fn glorot(rng: &mut crate::rng::Rng, fan_in: usize, fan_out: usize) -> Tensor {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Tensor::matrix(
        fan_in,
        fan_out,
        (0..fan_in * fan_out)
            .map(|_| rng.random_range(-bound..=bound))
            .collect(),
    )
}

fn insert_mlp(
    params: &mut ModelParams,
    rng: &mut crate::rng::Rng,
    prefix: &str,
    input: usize,
    head: &HeadConfig,
) {
    params.insert(
        format!("{prefix}/hidden/W"),
        glorot(rng, input, head.hidden),
    );
    params.insert(format!("{prefix}/hidden/b"), Tensor::zeros(1, head.hidden));
    params.insert(
        format!("{prefix}/out/W"),
        glorot(rng, head.hidden, head.out),
    );
    params.insert(format!("{prefix}/out/b"), Tensor::zeros(1, head.out));
}

/// A standalone two-layer head under `prefix`, initialised like [`init_params`].
pub fn init_head(
    prefix: &str,
    input_dim: usize,
    head: &HeadConfig,
    seed: u64,
) -> Result<ModelParams, ModelError> {
    head.validate()?;
    if input_dim == 0 {
        return Err(ModelError::Config(
            "input dimension must be positive".into(),
        ));
    }
    let mut params = ModelParams::new();
    insert_mlp(
        &mut params,
        &mut stream(seed, Stream::Probe),
        prefix,
        input_dim,
        head,
    );
    Ok(params)
}

/// Glorot-uniform weights and zero biases, deterministic under `seed`.
pub fn init_params(
    spec: &ModelSpec,
    input_dim: usize,
    seed: u64,
) -> Result<ModelParams, ModelError> {
    spec.encoder.validate()?;
    if input_dim == 0 {
        return Err(ModelError::Config(
            "input dimension must be positive".into(),
        ));
    }
    let mut rng = stream(seed, Stream::Init);
    let mut params = ModelParams::new();
    let dims = spec.encoder.layer_dims(input_dim);
    for (k, w) in dims.windows(2).enumerate() {
        params.insert(format!("encoder/layer{k}/W"), glorot(&mut rng, w[0], w[1]));
        params.insert(format!("encoder/layer{k}/b"), Tensor::zeros(1, w[1]));
    }
    let d = spec.encoder.embedding_dim;
    match &spec.task {
        TaskHead::Classifier(head) => {
            head.validate()?;
            insert_mlp(&mut params, &mut rng, "task", d, head);
        }
        TaskHead::Bilinear => params.insert("task/bilinear/B", glorot(&mut rng, d, d)),
    }
    for (name, head) in &spec.adversaries {
        head.validate()?;
        if name.contains('/') {
            return Err(ModelError::Config(format!(
                "attribute name {name} may not contain '/'"
            )));
        }
        insert_mlp(&mut params, &mut rng, &format!("adversary/{name}"), d, head);
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Aggregation, Nonlinearity};

    fn spec() -> ModelSpec {
        ModelSpec {
            encoder: EncoderConfig {
                layer_count: 2,
                hidden_dims: vec![8],
                embedding_dim: 6,
                aggregation: Aggregation::Mean,
                nonlinearity: Nonlinearity::LeakyRelu,
                include_self: true,
            },
            task: TaskHead::Classifier(HeadConfig { hidden: 5, out: 2 }),
            adversaries: vec![("sensitive".into(), HeadConfig { hidden: 4, out: 3 })],
        }
    }

    #[test]
    fn deterministic_and_zero_biases() {
        let a = init_params(&spec(), 4, 11).unwrap();
        assert_eq!(a, init_params(&spec(), 4, 11).unwrap());
        assert_ne!(a, init_params(&spec(), 4, 12).unwrap());
        for (k, v) in a.iter() {
            if k.ends_with("/b") {
                assert!(v.data().iter().all(|&x| x == 0.0), "{k}");
            }
        }
        assert_eq!(a.get("encoder/layer0/W").unwrap().shape(), &[4, 8]);
        assert_eq!(a.get("encoder/layer1/W").unwrap().shape(), &[8, 6]);
        assert_eq!(a.get("adversary/sensitive/out/W").unwrap().shape(), &[4, 3]);
    }

    #[test]
    fn partition_is_total() {
        let p = init_params(&spec(), 4, 0).unwrap();
        let total: usize = [ParamGroup::Encoder, ParamGroup::Task, ParamGroup::Adversary]
            .iter()
            .map(|&g| p.group(g).count())
            .sum();
        assert_eq!(total, p.len());
    }

    #[test]
    fn weight_mean_within_three_sigma() {
        let mut rng = stream(1, Stream::Init);
        let (fi, fo) = (100, 100);
        let w = glorot(&mut rng, fi, fo);
        let bound = (6.0 / (fi + fo) as f64).sqrt();
        assert!(w.data().iter().all(|v| v.abs() <= bound));
        let mean = w.data().iter().sum::<f64>() / w.len() as f64;
        let sd = bound / 3f64.sqrt() / (w.len() as f64).sqrt();
        assert!(mean.abs() <= 3.0 * sd, "mean {mean}");
    }
}
