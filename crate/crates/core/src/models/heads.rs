use std::collections::BTreeMap;

use super::ModelError;
use crate::autodiff::{Tape, Tensor, Var};

/// Negative-side slope of every leaky-ReLU in the models.
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

/// Two-layer MLP head: `leaky_relu(z W1 + b1) W2 + b2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeadConfig {
    pub hidden: usize,
    pub out: usize,
}

impl HeadConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.hidden == 0 || self.out == 0 {
            return Err(ModelError::Config("head dims must be positive".into()));
        }
        Ok(())
    }
}

/// Task decoder `h`.
#[derive(Clone, Debug, PartialEq)]
pub enum TaskHead {
    /// Node classification logits.
    Classifier(HeadConfig),
    /// Edge scores `z_u^T B z_v`.
    Bilinear,
}

fn var(vars: &BTreeMap<String, Var>, key: String) -> Result<Var, ModelError> {
    vars.get(&key).copied().ok_or(ModelError::MissingParam(key))
}

/// Logits of the head stored under `prefix` (e.g. `task` or `adversary/sensitive`).
pub fn head_forward(
    tape: &mut Tape,
    z: Var,
    vars: &BTreeMap<String, Var>,
    prefix: &str,
) -> Result<Var, ModelError> {
    let w1 = var(vars, format!("{prefix}/hidden/W"))?;
    let b1 = var(vars, format!("{prefix}/hidden/b"))?;
    let w2 = var(vars, format!("{prefix}/out/W"))?;
    let b2 = var(vars, format!("{prefix}/out/b"))?;
    let h = tape.matmul(z, w1)?;
    let h = tape.add(h, b1)?;
    let h = tape.leaky_relu(h, DEFAULT_LEAKY_SLOPE)?;
    let o = tape.matmul(h, w2)?;
    Ok(tape.add(o, b2)?)
}

/// `z_u^T B z_v` for a batch of edges, as an `E x 1` column.
pub fn bilinear_scores(
    tape: &mut Tape,
    z: Var,
    b: Var,
    edges: &[(usize, usize)],
) -> Result<Var, ModelError> {
    let us: Vec<usize> = edges.iter().map(|e| e.0).collect();
    let vs: Vec<usize> = edges.iter().map(|e| e.1).collect();
    let zu = tape.gather_rows(z, us)?;
    let zv = tape.gather_rows(z, vs)?;
    let left = tape.matmul(zu, b)?;
    let prod = tape.mul(left, zv)?;
    let d = tape.value(z).cols();
    let ones = tape.constant(Tensor::filled(d, 1, 1.0));
    Ok(tape.matmul(prod, ones)?)
}

/// `z_u^T B z_v`.
pub fn decode_edge(z_u: &[f64], z_v: &[f64], b: &Tensor) -> f64 {
    assert_eq!(b.rows(), z_u.len());
    assert_eq!(b.cols(), z_v.len());
    let mut s = 0.0;
    for (i, zu) in z_u.iter().enumerate() {
        let row = b.row(i);
        s += zu * row.iter().zip(z_v).map(|(a, v)| a * v).sum::<f64>();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::check_gradients;

    #[test]
    fn decode_edge_examples() {
        assert_eq!(
            decode_edge(&[1.0, 0.0], &[1.0, 0.0], &Tensor::identity(2)),
            1.0
        );
        assert_eq!(
            decode_edge(&[0.0, 1.0], &[1.0, 0.0], &Tensor::identity(2)),
            0.0
        );
        let b = Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]);
        assert_eq!(decode_edge(&[1.0, 2.0], &[3.0, 1.0], &b), 7.0);
    }

    #[test]
    fn decode_edge_transpose_symmetry() {
        let b = Tensor::from_rows(&[
            vec![0.3, -1.2, 2.0],
            vec![0.5, 0.1, -0.4],
            vec![1.1, 0.0, 0.7],
        ]);
        let (u, v) = ([0.2, -0.7, 1.5], [1.0, 0.4, -0.3]);
        let a = decode_edge(&u, &v, &b);
        let c = decode_edge(&v, &u, &b.transpose());
        assert!((a - c).abs() < 1e-15);
    }

    fn head_params(w1: Tensor, w2: Tensor) -> BTreeMap<String, Tensor> {
        let mut p = BTreeMap::new();
        p.insert("h/hidden/b".into(), Tensor::zeros(1, w1.cols()));
        p.insert("h/out/b".into(), Tensor::zeros(1, w2.cols()));
        p.insert("h/hidden/W".into(), w1);
        p.insert("h/out/W".into(), w2);
        p
    }

    fn run(p: &BTreeMap<String, Tensor>, z: Tensor) -> Tensor {
        let mut tape = Tape::new();
        let vars: BTreeMap<_, _> = p
            .iter()
            .map(|(k, v)| (k.clone(), tape.param(k.clone(), v.clone())))
            .collect();
        let z = tape.constant(z);
        let out = head_forward(&mut tape, z, &vars, "h").unwrap();
        tape.value(out).clone()
    }

    #[test]
    fn zero_weights_zero_logits() {
        let p = head_params(Tensor::zeros(3, 4), Tensor::zeros(4, 2));
        let out = run(&p, Tensor::filled(5, 3, 0.7));
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_like_weights_reproduce_affine_map() {
        let mut p = head_params(Tensor::identity(1), Tensor::scalar(2.0));
        p.insert("h/out/b".into(), Tensor::scalar(0.5));
        let out = run(&p, Tensor::column_vector(vec![1.0, 3.0]));
        assert_eq!(out.data(), &[2.5, 6.5]);
    }

    #[test]
    fn head_gradients_match_finite_differences() {
        let w1 = Tensor::matrix(3, 4, (0..12).map(|i| (i as f64 * 0.37).sin()).collect());
        let w2 = Tensor::matrix(4, 2, (0..8).map(|i| (i as f64 * 0.91).cos()).collect());
        let mut p = head_params(w1, w2);
        p.insert(
            "h/hidden/b".into(),
            Tensor::row_vector(vec![0.1, -0.2, 0.3, 0.05]),
        );
        let z = Tensor::matrix(5, 3, (0..15).map(|i| (i as f64 * 0.53).sin()).collect());
        let err = check_gradients(
            |tape, vars| {
                let zc = tape.constant(z.clone());
                let logits = head_forward(tape, zc, vars, "h").map_err(|e| match e {
                    ModelError::Autodiff(a) => a,
                    other => panic!("{other}"),
                })?;
                tape.softmax_cross_entropy(logits, vec![0, 1, 1, 0, 1])
            },
            &p,
            1e-5,
        )
        .unwrap();
        assert!(err <= 1e-5, "err {err}");
    }
}
