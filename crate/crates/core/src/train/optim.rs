use std::collections::BTreeMap;

use super::{OptimizerKind, TrainError};
use crate::autodiff::Gradients;
use crate::models::{ModelParams, ParamGroup};

#[derive(Clone, Debug, PartialEq)]
struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
    steps: i32,
}

/// Update rule restricted to a fixed set of parameter groups. Adam keeps one
/// moment pair and step counter per tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimizer {
    kind: OptimizerKind,
    groups: Vec<ParamGroup>,
    state: BTreeMap<String, Moments>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, groups: &[ParamGroup]) -> Self {
        Self {
            kind,
            groups: groups.to_vec(),
            state: BTreeMap::new(),
        }
    }

    pub fn groups(&self) -> &[ParamGroup] {
        &self.groups
    }

    /// Adam step count of one tensor (0 before its first update).
    pub fn steps(&self, path: &str) -> i32 {
        self.state.get(path).map_or(0, |s| s.steps)
    }

    /// Applies `grads` at `rate`. Tensors without a gradient are left alone.
    /// Nothing is written unless every gradient is finite and owned by this optimizer.
    pub fn step(
        &mut self,
        params: &mut ModelParams,
        grads: &Gradients,
        rate: f64,
    ) -> Result<(), TrainError> {
        for (path, g) in grads.iter() {
            match ParamGroup::of(path) {
                Some(group) if self.groups.contains(&group) => {}
                _ => {
                    return Err(TrainError::Contract(format!(
                        "gradient for {path} is outside this optimizer's groups {:?}",
                        self.groups
                    )))
                }
            }
            let p = params
                .get(path)
                .map_err(|e| TrainError::Contract(e.to_string()))?;
            if p.shape() != g.shape() {
                return Err(TrainError::Contract(format!(
                    "gradient shape mismatch for {path}"
                )));
            }
            if !g.is_finite() {
                return Err(TrainError::Numeric(format!(
                    "non-finite gradient for {path}"
                )));
            }
        }
        for (path, g) in grads.iter() {
            let p = params.get_mut(path).expect("checked above").data_mut();
            match self.kind {
                OptimizerKind::Sgd => {
                    for (x, d) in p.iter_mut().zip(g.data()) {
                        *x -= rate * d;
                    }
                }
                OptimizerKind::Adam {
                    beta1,
                    beta2,
                    epsilon,
                } => {
                    let s = self.state.entry(path.clone()).or_insert_with(|| Moments {
                        m: vec![0.0; g.len()],
                        v: vec![0.0; g.len()],
                        steps: 0,
                    });
                    s.steps += 1;
                    let c1 = 1.0 - beta1.powi(s.steps);
                    let c2 = 1.0 - beta2.powi(s.steps);
                    for i in 0..p.len() {
                        let d = g.data()[i];
                        s.m[i] = beta1 * s.m[i] + (1.0 - beta1) * d;
                        s.v[i] = beta2 * s.v[i] + (1.0 - beta2) * d * d;
                        let mh = s.m[i] / c1;
                        let vh = s.v[i] / c2;
                        p[i] -= rate * mh / (vh.sqrt() + epsilon);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Clamps every entry of the given group into `[-c, c]`.
pub fn clip_params(params: &mut ModelParams, group: ParamGroup, c: f64) {
    for (path, t) in params.iter_mut() {
        if ParamGroup::of(path) == Some(group) {
            t.data_mut().iter_mut().for_each(|x| *x = x.clamp(-c, c));
        }
    }
}
