use std::collections::BTreeMap;
use std::sync::Arc;

use super::tensor::{matmul_raw, Tensor};
use super::AutodiffError;

/// Fixed sparse row operator: output row `r` is `sum_(c, w) w * input[c]`.
///
/// Used for neighborhood aggregation; the weights are constants, never trained.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRows {
    input_rows: usize,
    offsets: Vec<usize>,
    entries: Vec<(usize, f64)>,
}

impl SparseRows {
    pub fn from_rows(input_rows: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut entries = Vec::new();
        offsets.push(0);
        for row in rows {
            for &(c, _) in &row {
                assert!(
                    c < input_rows,
                    "sparse column {c} out of range {input_rows}"
                );
            }
            entries.extend(row);
            offsets.push(entries.len());
        }
        Self {
            input_rows,
            offsets,
            entries,
        }
    }

    pub fn output_rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn input_rows(&self) -> usize {
        self.input_rows
    }

    pub fn row(&self, r: usize) -> &[(usize, f64)] {
        &self.entries[self.offsets[r]..self.offsets[r + 1]]
    }

    /// Dense `output_rows x input_rows` copy, for reference computations.
    pub fn to_dense(&self) -> Tensor {
        let mut t = Tensor::zeros(self.output_rows(), self.input_rows);
        let n = self.input_rows;
        for r in 0..self.output_rows() {
            for &(c, w) in self.row(r) {
                t.data_mut()[r * n + c] += w;
            }
        }
        t
    }
}

/// Forward primitives recorded on a [`Tape`].
#[derive(Clone, Debug)]
pub enum OpKind {
    MatMul,
    /// Same-shape addition, or a `1 x c` right operand added to every row.
    Add,
    Mul,
    LeakyRelu(f64),
    Sigmoid,
    RowGather(Arc<[usize]>),
    MeanRows,
    ConcatRows,
    Scale(f64),
    Sum,
    Aggregate(Arc<SparseRows>),
    /// Mean softmax cross-entropy of logits rows against class labels.
    SoftmaxCrossEntropy(Arc<[usize]>),
    GradReverse(f64),
}

impl OpKind {
    pub fn name(&self) -> &'static str {
        match self {
            OpKind::MatMul => "matmul",
            OpKind::Add => "add",
            OpKind::Mul => "elementwise-mul",
            OpKind::LeakyRelu(_) => "leaky-relu",
            OpKind::Sigmoid => "sigmoid",
            OpKind::RowGather(_) => "row-gather",
            OpKind::MeanRows => "mean-over-rows",
            OpKind::ConcatRows => "concat-rows",
            OpKind::Scale(_) => "scale",
            OpKind::Sum => "sum",
            OpKind::Aggregate(_) => "aggregate",
            OpKind::SoftmaxCrossEntropy(_) => "softmax-cross-entropy",
            OpKind::GradReverse(_) => "grad-reverse",
        }
    }
}

#[derive(Clone, Debug)]
enum Origin {
    Constant,
    Param(String),
    Op(OpKind, Vec<Var>),
}

#[derive(Clone, Debug)]
struct Node {
    origin: Origin,
    value: Tensor,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Gradients of a scalar loss, keyed by parameter path.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients(BTreeMap<String, Tensor>);

impl Gradients {
    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.0.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_map(self) -> BTreeMap<String, Tensor> {
        self.0
    }
}

/// Define-by-run computation record for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so every parent precedes its child.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(Origin::Constant, value)
    }

    /// Records a trainable leaf. Its gradient is reported under `name`.
    pub fn param(&mut self, name: impl Into<String>, value: Tensor) -> Var {
        self.push(Origin::Param(name.into()), value)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, origin: Origin, value: Tensor) -> Var {
        self.nodes.push(Node { origin, value });
        Var(self.nodes.len() - 1)
    }

    fn check(&self, v: Var) -> Result<&Tensor, AutodiffError> {
        self.nodes
            .get(v.0)
            .map(|n| &n.value)
            .ok_or(AutodiffError::UnknownVar(v.0))
    }

    pub fn apply(&mut self, kind: OpKind, operands: &[Var]) -> Result<Var, AutodiffError> {
        let inputs = operands
            .iter()
            .map(|&v| self.check(v))
            .collect::<Result<Vec<_>, _>>()?;
        if inputs.iter().any(|t| !t.is_finite()) {
            return Err(AutodiffError::NonFinite { kind: kind.name() });
        }
        let out = forward(&kind, &inputs)?;
        if !out.is_finite() {
            return Err(AutodiffError::NonFinite { kind: kind.name() });
        }
        Ok(self.push(Origin::Op(kind, operands.to_vec()), out))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.apply(OpKind::MatMul, &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.apply(OpKind::Add, &[a, b])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let neg = self.scale(b, -1.0)?;
        self.add(a, neg)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.apply(OpKind::Mul, &[a, b])
    }

    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Result<Var, AutodiffError> {
        self.apply(OpKind::LeakyRelu(slope), &[x])
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var, AutodiffError> {
        self.apply(OpKind::Sigmoid, &[x])
    }

    pub fn gather_rows(
        &mut self,
        x: Var,
        indices: impl Into<Arc<[usize]>>,
    ) -> Result<Var, AutodiffError> {
        self.apply(OpKind::RowGather(indices.into()), &[x])
    }

    pub fn mean_rows(&mut self, x: Var) -> Result<Var, AutodiffError> {
        self.apply(OpKind::MeanRows, &[x])
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var, AutodiffError> {
        self.apply(OpKind::ConcatRows, parts)
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Result<Var, AutodiffError> {
        self.apply(OpKind::Scale(c), &[x])
    }

    pub fn sum(&mut self, x: Var) -> Result<Var, AutodiffError> {
        self.apply(OpKind::Sum, &[x])
    }

    pub fn aggregate(&mut self, op: &Arc<SparseRows>, x: Var) -> Result<Var, AutodiffError> {
        self.apply(OpKind::Aggregate(Arc::clone(op)), &[x])
    }

    pub fn softmax_cross_entropy(
        &mut self,
        logits: Var,
        labels: impl Into<Arc<[usize]>>,
    ) -> Result<Var, AutodiffError> {
        self.apply(OpKind::SoftmaxCrossEntropy(labels.into()), &[logits])
    }

    /// Identity on the forward pass; multiplies the upstream gradient by `-lambda`.
    pub fn grad_reverse(&mut self, x: Var, lambda: f64) -> Result<Var, AutodiffError> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(AutodiffError::NegativeReversal(lambda));
        }
        self.apply(OpKind::GradReverse(lambda), &[x])
    }

    /// Gradients of the scalar `loss` with respect to every reachable parameter.
    pub fn backward(&self, loss: Var) -> Result<Gradients, AutodiffError> {
        let lv = self.check(loss)?;
        if lv.len() != 1 {
            return Err(AutodiffError::NotScalar {
                shape: lv.shape().to_vec(),
            });
        }
        let mut adj: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        adj[loss.0] = Some(vec![1.0]);
        let mut grads: BTreeMap<String, Tensor> = BTreeMap::new();

        for idx in (0..=loss.0).rev() {
            let Some(upstream) = adj[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            match &node.origin {
                Origin::Constant => {}
                Origin::Param(name) => {
                    let shape = node.value.shape().to_vec();
                    match grads.get_mut(name) {
                        Some(g) => {
                            for (a, b) in g.data_mut().iter_mut().zip(&upstream) {
                                *a += b;
                            }
                        }
                        None => {
                            grads.insert(name.clone(), Tensor::new(shape, upstream)?);
                        }
                    }
                }
                Origin::Op(kind, parents) => {
                    let inputs: Vec<&Tensor> =
                        parents.iter().map(|p| &self.nodes[p.0].value).collect();
                    let parent_grads = backward_op(kind, &inputs, &node.value, &upstream);
                    for (p, g) in parents.iter().zip(parent_grads) {
                        accumulate(&mut adj[p.0], g);
                    }
                }
            }
        }
        Ok(Gradients(grads))
    }
}

fn accumulate(slot: &mut Option<Vec<f64>>, g: Vec<f64>) {
    match slot {
        Some(acc) => {
            for (a, b) in acc.iter_mut().zip(&g) {
                *a += b;
            }
        }
        None => *slot = Some(g),
    }
}

fn dim_error(kind: &OpKind, inputs: &[&Tensor]) -> AutodiffError {
    AutodiffError::Dimension {
        kind: kind.name(),
        shapes: inputs.iter().map(|t| t.shape().to_vec()).collect(),
    }
}

fn forward(kind: &OpKind, inputs: &[&Tensor]) -> Result<Tensor, AutodiffError> {
    let arity = match kind {
        OpKind::MatMul | OpKind::Add | OpKind::Mul => Some(2),
        OpKind::ConcatRows => None,
        _ => Some(1),
    };
    match arity {
        Some(n) if inputs.len() != n => {
            return Err(AutodiffError::Arity {
                kind: kind.name(),
                expected: n,
                found: inputs.len(),
            })
        }
        None if inputs.is_empty() => {
            return Err(AutodiffError::Arity {
                kind: kind.name(),
                expected: 1,
                found: 0,
            })
        }
        _ => {}
    }
    if inputs.iter().any(|t| !t.is_matrix()) {
        return Err(dim_error(kind, inputs));
    }
    let x = inputs[0];
    let map = |f: &dyn Fn(f64) -> f64| {
        Tensor::matrix(x.rows(), x.cols(), x.data().iter().map(|&v| f(v)).collect())
    };

    let out = match kind {
        OpKind::MatMul => {
            let b = inputs[1];
            if x.cols() != b.rows() {
                return Err(dim_error(kind, inputs));
            }
            Tensor::matrix(
                x.rows(),
                b.cols(),
                matmul_raw(x.data(), b.data(), x.rows(), x.cols(), b.cols()),
            )
        }
        OpKind::Add => {
            let b = inputs[1];
            if x.shape() == b.shape() {
                Tensor::matrix(
                    x.rows(),
                    x.cols(),
                    x.data().iter().zip(b.data()).map(|(a, b)| a + b).collect(),
                )
            } else if b.rows() == 1 && b.cols() == x.cols() {
                let c = x.cols();
                Tensor::matrix(
                    x.rows(),
                    c,
                    x.data()
                        .iter()
                        .enumerate()
                        .map(|(i, a)| a + b.data()[i % c])
                        .collect(),
                )
            } else {
                return Err(dim_error(kind, inputs));
            }
        }
        OpKind::Mul => {
            let b = inputs[1];
            if x.shape() != b.shape() {
                return Err(dim_error(kind, inputs));
            }
            Tensor::matrix(
                x.rows(),
                x.cols(),
                x.data().iter().zip(b.data()).map(|(a, b)| a * b).collect(),
            )
        }
        OpKind::LeakyRelu(slope) => map(&|v| if v > 0.0 { v } else { slope * v }),
        OpKind::Sigmoid => map(&sigmoid),
        OpKind::Scale(c) => map(&|v| c * v),
        OpKind::RowGather(idx) => {
            if idx.is_empty() || idx.iter().any(|&i| i >= x.rows()) {
                return Err(dim_error(kind, inputs));
            }
            let mut data = Vec::with_capacity(idx.len() * x.cols());
            for &i in idx.iter() {
                data.extend_from_slice(x.row(i));
            }
            Tensor::matrix(idx.len(), x.cols(), data)
        }
        OpKind::MeanRows => {
            let c = x.cols();
            let mut acc = vec![0.0; c];
            for r in 0..x.rows() {
                for (a, v) in acc.iter_mut().zip(x.row(r)) {
                    *a += v;
                }
            }
            let n = x.rows() as f64;
            Tensor::row_vector(acc.into_iter().map(|v| v / n).collect())
        }
        OpKind::ConcatRows => {
            let c = x.cols();
            if inputs.iter().any(|t| t.cols() != c) {
                return Err(dim_error(kind, inputs));
            }
            let rows = inputs.iter().map(|t| t.rows()).sum();
            let data = inputs
                .iter()
                .flat_map(|t| t.data().iter().copied())
                .collect();
            Tensor::matrix(rows, c, data)
        }
        OpKind::Sum => Tensor::scalar(x.data().iter().sum()),
        OpKind::Aggregate(op) => {
            if op.input_rows() != x.rows() {
                return Err(dim_error(kind, inputs));
            }
            let c = x.cols();
            let mut data = vec![0.0; op.output_rows() * c];
            for r in 0..op.output_rows() {
                let out = &mut data[r * c..(r + 1) * c];
                for &(src, w) in op.row(r) {
                    for (o, v) in out.iter_mut().zip(x.row(src)) {
                        *o += w * v;
                    }
                }
            }
            Tensor::matrix(op.output_rows(), c, data)
        }
        OpKind::SoftmaxCrossEntropy(labels) => {
            if labels.len() != x.rows() || labels.iter().any(|&l| l >= x.cols()) {
                return Err(dim_error(kind, inputs));
            }
            let mut total = 0.0;
            for (r, &label) in labels.iter().enumerate() {
                let row = x.row(r);
                total += log_sum_exp(row) - row[label];
            }
            Tensor::scalar(total / x.rows() as f64)
        }
        OpKind::GradReverse(_) => x.clone(),
    };
    Ok(out)
}

fn backward_op(kind: &OpKind, inputs: &[&Tensor], out: &Tensor, up: &[f64]) -> Vec<Vec<f64>> {
    let x = inputs[0];
    match kind {
        OpKind::MatMul => {
            let b = inputs[1];
            let (n, k, m) = (x.rows(), x.cols(), b.cols());
            let bt = b.transpose();
            let da = matmul_raw(up, bt.data(), n, m, k);
            let at = x.transpose();
            let db = matmul_raw(at.data(), up, k, n, m);
            vec![da, db]
        }
        OpKind::Add => {
            let b = inputs[1];
            let db = if b.shape() == x.shape() {
                up.to_vec()
            } else {
                let c = x.cols();
                let mut acc = vec![0.0; c];
                for (i, g) in up.iter().enumerate() {
                    acc[i % c] += g;
                }
                acc
            };
            vec![up.to_vec(), db]
        }
        OpKind::Mul => {
            let b = inputs[1];
            let da = up.iter().zip(b.data()).map(|(g, v)| g * v).collect();
            let db = up.iter().zip(x.data()).map(|(g, v)| g * v).collect();
            vec![da, db]
        }
        OpKind::LeakyRelu(slope) => vec![up
            .iter()
            .zip(x.data())
            .map(|(g, &v)| if v > 0.0 { *g } else { slope * g })
            .collect()],
        OpKind::Sigmoid => vec![up
            .iter()
            .zip(out.data())
            .map(|(g, s)| g * s * (1.0 - s))
            .collect()],
        OpKind::Scale(c) => vec![up.iter().map(|g| c * g).collect()],
        OpKind::RowGather(idx) => {
            let c = x.cols();
            let mut dx = vec![0.0; x.len()];
            for (r, &i) in idx.iter().enumerate() {
                for (d, g) in dx[i * c..(i + 1) * c]
                    .iter_mut()
                    .zip(&up[r * c..(r + 1) * c])
                {
                    *d += g;
                }
            }
            vec![dx]
        }
        OpKind::MeanRows => {
            let n = x.rows() as f64;
            let c = x.cols();
            vec![(0..x.len()).map(|i| up[i % c] / n).collect()]
        }
        OpKind::ConcatRows => {
            let mut offset = 0;
            inputs
                .iter()
                .map(|t| {
                    let g = up[offset..offset + t.len()].to_vec();
                    offset += t.len();
                    g
                })
                .collect()
        }
        OpKind::Sum => vec![vec![up[0]; x.len()]],
        OpKind::Aggregate(op) => {
            let c = x.cols();
            let mut dx = vec![0.0; x.len()];
            for r in 0..op.output_rows() {
                let g = &up[r * c..(r + 1) * c];
                for &(src, w) in op.row(r) {
                    for (d, gv) in dx[src * c..(src + 1) * c].iter_mut().zip(g) {
                        *d += w * gv;
                    }
                }
            }
            vec![dx]
        }
        OpKind::SoftmaxCrossEntropy(labels) => {
            let c = x.cols();
            let scale = up[0] / x.rows() as f64;
            let mut dx = vec![0.0; x.len()];
            for (r, &label) in labels.iter().enumerate() {
                let row = x.row(r);
                let lse = log_sum_exp(row);
                for j in 0..c {
                    let p = (row[j] - lse).exp();
                    let target = if j == label { 1.0 } else { 0.0 };
                    dx[r * c + j] = scale * (p - target);
                }
            }
            vec![dx]
        }
        OpKind::GradReverse(lambda) => vec![up.iter().map(|g| -lambda * g).collect()],
    }
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn log_sum_exp(row: &[f64]) -> f64 {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Row-wise softmax of a logits matrix.
pub fn softmax_rows(logits: &Tensor) -> Tensor {
    let c = logits.cols();
    let mut data = Vec::with_capacity(logits.len());
    for r in 0..logits.rows() {
        let row = logits.row(r);
        let lse = log_sum_exp(row);
        data.extend(row.iter().map(|v| (v - lse).exp()));
    }
    Tensor::matrix(logits.rows(), c, data)
}
