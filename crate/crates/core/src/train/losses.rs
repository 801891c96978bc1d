use super::TrainError;
use crate::autodiff::{Tape, Tensor, Var};

/// Mean softmax cross-entropy of adversary logits against the paired labels.
pub fn adversary_loss_tv(
    tape: &mut Tape,
    logits: Var,
    labels: &[usize],
) -> Result<Var, TrainError> {
    if labels.is_empty() {
        return Err(TrainError::Contract(
            "adversary loss over an empty pairing".into(),
        ));
    }
    Ok(tape.softmax_cross_entropy(logits, labels.to_vec())?)
}

/// `max_a mean(s | A = a) - min_a mean(s | A = a)` over the classes present in
/// the batch, for an `E x 1` score column. `None` when fewer than two classes appear.
pub fn adversary_loss_wasserstein(
    tape: &mut Tape,
    scores: Var,
    labels: &[usize],
    classes: usize,
) -> Result<Option<Var>, TrainError> {
    let shape = tape.value(scores).shape().to_vec();
    if shape != [labels.len(), 1] {
        return Err(TrainError::Contract(format!(
            "critic scores of shape {shape:?} for {} labels",
            labels.len()
        )));
    }
    let mut means = Vec::new();
    for a in 0..classes {
        let rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == a).collect();
        if rows.is_empty() {
            continue;
        }
        let picked = tape.gather_rows(scores, rows)?;
        let m = tape.mean_rows(picked)?;
        means.push((tape.value(m).data()[0], m));
    }
    if means.len() < 2 {
        return Ok(None);
    }
    let hi = means
        .iter()
        .copied()
        .fold(means[0], |b, x| if x.0 > b.0 { x } else { b });
    let lo = means
        .iter()
        .copied()
        .fold(means[0], |b, x| if x.0 < b.0 { x } else { b });
    Ok(Some(tape.sub(hi.1, lo.1)?))
}

pub fn task_loss_classification(
    tape: &mut Tape,
    logits: Var,
    labels: &[usize],
) -> Result<Var, TrainError> {
    if labels.is_empty() {
        return Err(TrainError::Contract("task loss over an empty batch".into()));
    }
    Ok(tape.softmax_cross_entropy(logits, labels.to_vec())?)
}

/// Mean squared error of an `E x 1` prediction column.
pub fn task_loss_mse(tape: &mut Tape, preds: Var, targets: &[f64]) -> Result<Var, TrainError> {
    if targets.is_empty() {
        return Err(TrainError::Contract("task loss over an empty batch".into()));
    }
    let t = tape.constant(Tensor::column_vector(targets.to_vec()));
    let diff = tape.sub(preds, t)?;
    let sq = tape.mul(diff, diff)?;
    let total = tape.sum(sq)?;
    Ok(tape.scale(total, 1.0 / targets.len() as f64)?)
}
