//! Reverse-mode automatic differentiation over dense `f64` tensors.

mod gradcheck;
mod tape;
mod tensor;

pub use gradcheck::{check_gradients, ParamVars};
pub use tape::{log_sum_exp, sigmoid, softmax_rows, Gradients, OpKind, SparseRows, Tape, Var};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("invalid tensor shape {shape:?}")]
    InvalidShape { shape: Vec<usize> },
    #[error("shape {shape:?} needs {} values, got {found}", shape.iter().product::<usize>())]
    ValueCount { shape: Vec<usize>, found: usize },
    #[error("dimension mismatch in {kind}: operand shapes {shapes:?}")]
    Dimension {
        kind: &'static str,
        shapes: Vec<Vec<usize>>,
    },
    #[error("{kind} expects {expected} operands, got {found}")]
    Arity {
        kind: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in {kind}")]
    NonFinite { kind: &'static str },
    #[error("backward needs a scalar loss, got shape {shape:?}")]
    NotScalar { shape: Vec<usize> },
    #[error("gradient reversal scale must be a finite non-negative number, got {0}")]
    NegativeReversal(f64),
    #[error("variable {0} is not on this tape")]
    UnknownVar(usize),
    #[error("finite-difference step must be positive, got {0}")]
    InvalidStep(f64),
}
