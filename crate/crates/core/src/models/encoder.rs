use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use super::{ModelError, ModelParams, DEFAULT_LEAKY_SLOPE};
use crate::autodiff::{SparseRows, Tape, Tensor, Var};
use crate::graph::Graph;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregation {
    Mean,
    Sum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Nonlinearity {
    LeakyRelu,
    Relu,
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderConfig {
    pub layer_count: usize,
    /// Output widths of layers `0..layer_count-1`; the last layer emits `embedding_dim`.
    pub hidden_dims: Vec<usize>,
    pub embedding_dim: usize,
    pub aggregation: Aggregation,
    pub nonlinearity: Nonlinearity,
    pub include_self: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            layer_count: 2,
            hidden_dims: vec![64],
            embedding_dim: 64,
            aggregation: Aggregation::Mean,
            nonlinearity: Nonlinearity::LeakyRelu,
            include_self: true,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.layer_count < 1 {
            return Err(ModelError::Config(
                "encoder needs at least one layer".into(),
            ));
        }
        if self.hidden_dims.len() + 1 != self.layer_count {
            return Err(ModelError::Config(format!(
                "{} layers need {} hidden dims, got {}",
                self.layer_count,
                self.layer_count - 1,
                self.hidden_dims.len()
            )));
        }
        if self.embedding_dim == 0 || self.hidden_dims.contains(&0) {
            return Err(ModelError::Config("encoder dims must be positive".into()));
        }
        Ok(())
    }

    /// `[input, hidden.., embedding]`.
    pub fn layer_dims(&self, input_dim: usize) -> Vec<usize> {
        let mut dims = vec![input_dim];
        dims.extend(&self.hidden_dims);
        dims.push(self.embedding_dim);
        dims
    }
}

/// Row `v` averages (or sums) `N(v)`, plus `v` itself when `include_self`.
/// An empty neighborhood yields a zero row.
pub fn aggregation_operator(
    g: &Graph,
    aggregation: Aggregation,
    include_self: bool,
) -> Arc<SparseRows> {
    let rows = (0..g.node_count())
        .map(|v| {
            let mut members: Vec<usize> = g.neighbors(v).to_vec();
            if include_self {
                members.push(v);
            }
            let w = match aggregation {
                Aggregation::Mean if !members.is_empty() => 1.0 / members.len() as f64,
                _ => 1.0,
            };
            members.into_iter().map(|u| (u, w)).collect()
        })
        .collect();
    Arc::new(SparseRows::from_rows(g.node_count(), rows))
}

fn activate(tape: &mut Tape, x: Var, nl: Nonlinearity) -> Result<Var, ModelError> {
    Ok(match nl {
        Nonlinearity::LeakyRelu => tape.leaky_relu(x, DEFAULT_LEAKY_SLOPE)?,
        Nonlinearity::Relu => tape.leaky_relu(x, 0.0)?,
        Nonlinearity::None => x,
    })
}

fn var<'a>(vars: &'a BTreeMap<String, Var>, key: &str) -> Result<Var, ModelError> {
    vars.get(key)
        .copied()
        .ok_or_else(|| ModelError::MissingParam(key.to_string()))
}

/// `K` rounds of `X <- act(AGG(X) W + b)` recorded on `tape`.
pub fn encode(
    tape: &mut Tape,
    op: &Arc<SparseRows>,
    features: Var,
    vars: &BTreeMap<String, Var>,
    cfg: &EncoderConfig,
) -> Result<Var, ModelError> {
    cfg.validate()?;
    let mut x = features;
    for k in 0..cfg.layer_count {
        let agg = tape.aggregate(op, x)?;
        let w = var(vars, &format!("encoder/layer{k}/W"))?;
        let b = var(vars, &format!("encoder/layer{k}/b"))?;
        let lin = tape.matmul(agg, w)?;
        let lin = tape.add(lin, b)?;
        x = activate(tape, lin, cfg.nonlinearity)?;
    }
    Ok(x)
}

/// Frozen embeddings `Z = g(X)`; nothing is left on a live tape.
pub fn encode_values(
    g: &Graph,
    params: &ModelParams,
    cfg: &EncoderConfig,
) -> Result<EmbeddingTable, ModelError> {
    let mut tape = Tape::new();
    let vars = params.register_frozen(&mut tape);
    let op = aggregation_operator(g, cfg.aggregation, cfg.include_self);
    let x = tape.constant(g.features().clone());
    let z = encode(&mut tape, &op, x, &vars, cfg)?;
    Ok(EmbeddingTable(tape.value(z).clone()))
}

/// Dense-matrix version of [`encode_values`] used as an independent reference.
pub fn dense_reference_encode(
    g: &Graph,
    params: &ModelParams,
    cfg: &EncoderConfig,
) -> Result<Tensor, ModelError> {
    let n = g.node_count();
    let mut adj = vec![vec![0.0; n]; n];
    for v in 0..n {
        for &u in g.neighbors(v) {
            adj[v][u] = 1.0;
        }
        if cfg.include_self {
            adj[v][v] = 1.0;
        }
        if cfg.aggregation == Aggregation::Mean {
            let deg: f64 = adj[v].iter().sum();
            if deg > 0.0 {
                for a in adj[v].iter_mut() {
                    *a /= deg;
                }
            }
        }
    }
    let mut x: Vec<Vec<f64>> = (0..n).map(|v| g.features().row(v).to_vec()).collect();
    for k in 0..cfg.layer_count {
        let w = params.get(&format!("encoder/layer{k}/W"))?;
        let b = params.get(&format!("encoder/layer{k}/b"))?;
        let (din, dout) = (w.rows(), w.cols());
        let mut next = vec![vec![0.0; dout]; n];
        for v in 0..n {
            let mut agg = vec![0.0; din];
            for u in 0..n {
                for j in 0..din {
                    agg[j] += adj[v][u] * x[u][j];
                }
            }
            for o in 0..dout {
                let mut s = b.get(0, o);
                for j in 0..din {
                    s += agg[j] * w.get(j, o);
                }
                next[v][o] = match cfg.nonlinearity {
                    Nonlinearity::LeakyRelu if s <= 0.0 => DEFAULT_LEAKY_SLOPE * s,
                    Nonlinearity::Relu if s <= 0.0 => 0.0,
                    _ => s,
                };
            }
        }
        x = next;
    }
    Ok(Tensor::from_rows(&x))
}

/// Node embeddings `Z` (one row per node).
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable(pub Tensor);

impl EmbeddingTable {
    pub fn node_count(&self) -> usize {
        self.0.rows()
    }

    pub fn dim(&self) -> usize {
        self.0.cols()
    }

    pub fn row(&self, v: usize) -> &[f64] {
        self.0.row(v)
    }

    pub fn tensor(&self) -> &Tensor {
        &self.0
    }

    /// `node_id,z0,...,z{k-1}`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node_id");
        for j in 0..self.dim() {
            write!(out, ",z{j}").unwrap();
        }
        out.push('\n');
        for v in 0..self.node_count() {
            write!(out, "{v}").unwrap();
            for x in self.row(v) {
                write!(out, ",{x:?}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use rand::seq::SliceRandom;
    use rand::Rng as _;

    use super::*;
    use crate::graph::{Attribute, Graph};
    use crate::models::{init_params, HeadConfig, ModelSpec, TaskHead};
    use crate::rng::{stream, Stream};

    fn cfg(layers: usize, agg: Aggregation, include_self: bool, nl: Nonlinearity) -> EncoderConfig {
        EncoderConfig {
            layer_count: layers,
            hidden_dims: vec![5; layers - 1],
            embedding_dim: 3,
            aggregation: agg,
            nonlinearity: nl,
            include_self,
        }
    }

    fn params_for(enc: &EncoderConfig, input: usize, seed: u64) -> ModelParams {
        let spec = ModelSpec {
            encoder: enc.clone(),
            task: TaskHead::Classifier(HeadConfig { hidden: 2, out: 2 }),
            adversaries: vec![],
        };
        init_params(&spec, input, seed).unwrap()
    }

    fn random_graph(rng: &mut crate::rng::Rng, n: usize, d: usize) -> Graph {
        let feats = Tensor::matrix(
            n,
            d,
            (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect(),
        );
        let edges: Vec<_> = (0..n + 3)
            .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
            .collect();
        let attr = Attribute::new("s", (0..n).map(|v| v % 2).collect(), 2).unwrap();
        Graph::new(feats, &edges, None, vec![attr], None).unwrap()
    }

    #[test]
    fn zero_weights_give_zero_embeddings() {
        let mut rng = stream(0, Stream::Theory);
        let g = random_graph(&mut rng, 6, 3);
        let enc = cfg(2, Aggregation::Mean, true, Nonlinearity::LeakyRelu);
        let mut p = params_for(&enc, 3, 0);
        for (_, t) in p.iter_mut() {
            t.data_mut().fill(0.0);
        }
        let z = encode_values(&g, &p, &enc).unwrap();
        assert!(z.tensor().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_node_mean_with_identity_transform() {
        let feats = Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let attr = Attribute::new("s", vec![0, 1], 2).unwrap();
        let g = Graph::new(feats, &[(0, 1)], None, vec![attr], None).unwrap();
        let enc = EncoderConfig {
            layer_count: 1,
            hidden_dims: vec![],
            embedding_dim: 2,
            aggregation: Aggregation::Mean,
            nonlinearity: Nonlinearity::None,
            include_self: true,
        };
        let mut p = ModelParams::new();
        p.insert("encoder/layer0/W", Tensor::identity(2));
        p.insert("encoder/layer0/b", Tensor::zeros(1, 2));
        let z = encode_values(&g, &p, &enc).unwrap();
        assert_eq!(z.tensor().data(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn isolated_node_mean_without_self_is_zero_before_bias() {
        let feats = Tensor::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]);
        let attr = Attribute::new("s", vec![0, 1, 0], 2).unwrap();
        let g = Graph::new(feats, &[(0, 1)], None, vec![attr], None).unwrap();
        let enc = cfg(1, Aggregation::Mean, false, Nonlinearity::None);
        let p = params_for(&enc, 1, 3);
        let z = encode_values(&g, &p, &enc).unwrap();
        assert!(z.row(2).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matches_dense_reference() {
        let mut rng = stream(7, Stream::Theory);
        for (i, (agg, selfl, nl)) in [
            (Aggregation::Mean, true, Nonlinearity::LeakyRelu),
            (Aggregation::Sum, false, Nonlinearity::Relu),
            (Aggregation::Mean, false, Nonlinearity::None),
            (Aggregation::Sum, true, Nonlinearity::LeakyRelu),
        ]
        .into_iter()
        .enumerate()
        {
            for n in [1usize, 6, 20] {
                let g = random_graph(&mut rng, n, 4);
                let enc = cfg(1 + i % 3, agg, selfl, nl);
                let p = params_for(&enc, 4, i as u64);
                let fast = encode_values(&g, &p, &enc).unwrap();
                let dense = dense_reference_encode(&g, &p, &enc).unwrap();
                for (a, b) in fast.tensor().data().iter().zip(dense.data()) {
                    assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
                }
            }
        }
    }

    fn quantize(t: &mut Tensor) {
        for v in t.data_mut() {
            *v = (*v * 64.0).round() / 64.0;
        }
    }

    fn permuted(g: &Graph, perm: &[usize]) -> Graph {
        let n = g.node_count();
        // new node perm[v] carries old node v
        let mut rows = vec![vec![]; n];
        for v in 0..n {
            rows[perm[v]] = g.features().row(v).to_vec();
        }
        let edges: Vec<_> = g.edges().iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        let attr = Attribute::new("s", vec![0; n], 2).unwrap();
        Graph::new(Tensor::from_rows(&rows), &edges, None, vec![attr], None).unwrap()
    }

    #[test]
    fn permutation_equivariance() {
        let mut rng = stream(8, Stream::Theory);
        let n = 12;
        let mut g = random_graph(&mut rng, n, 3);
        let mut feats = g.features().clone();
        quantize(&mut feats);
        let attr = Attribute::new("s", vec![0; n], 2).unwrap();
        g = Graph::new(feats, g.edges(), None, vec![attr], None).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let h = permuted(&g, &perm);

        // Dyadic inputs and weights keep sum aggregation exact in any order.
        let enc = cfg(2, Aggregation::Sum, true, Nonlinearity::Relu);
        let mut p = params_for(&enc, 3, 1);
        for (_, t) in p.iter_mut() {
            quantize(t);
        }
        let zg = encode_values(&g, &p, &enc).unwrap();
        let zh = encode_values(&h, &p, &enc).unwrap();
        for v in 0..n {
            assert_eq!(zg.row(v), zh.row(perm[v]));
        }

        // Mean aggregation rounds per term, so only agreement to rounding holds.
        let enc = cfg(2, Aggregation::Mean, true, Nonlinearity::LeakyRelu);
        let p = params_for(&enc, 3, 2);
        let zg = encode_values(&g, &p, &enc).unwrap();
        let zh = encode_values(&h, &p, &enc).unwrap();
        for v in 0..n {
            for (a, b) in zg.row(v).iter().zip(zh.row(perm[v])) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn csv_header() {
        let z = EmbeddingTable(Tensor::from_rows(&[vec![1.0, -0.5]]));
        assert_eq!(z.to_csv(), "node_id,z0,z1\n0,1.0,-0.5\n");
    }
}
