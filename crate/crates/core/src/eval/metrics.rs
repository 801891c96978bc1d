use super::EvalError;

/// Unweighted mean of per-class F1; a class with `P + R = 0` scores 0.
pub fn macro_f1(pred: &[usize], truth: &[usize], classes: usize) -> Result<f64, EvalError> {
    if classes < 2 {
        return Err(EvalError::Contract(format!(
            "macro-F1 needs at least 2 classes, got {classes}"
        )));
    }
    if pred.len() != truth.len() {
        return Err(EvalError::Contract(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.iter().chain(truth).any(|&c| c >= classes) {
        return Err(EvalError::Contract("label out of range".into()));
    }
    let mut tp = vec![0usize; classes];
    let mut fp = vec![0usize; classes];
    let mut fneg = vec![0usize; classes];
    for (&p, &t) in pred.iter().zip(truth) {
        if p == t {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fneg[t] += 1;
        }
    }
    let total: f64 = (0..classes)
        .map(|c| {
            // 2PR / (P + R) = 2 tp / (2 tp + fp + fn)
            let denom = 2 * tp[c] + fp[c] + fneg[c];
            if tp[c] == 0 {
                0.0
            } else {
                2.0 * tp[c] as f64 / denom as f64
            }
        })
        .sum();
    Ok(total / classes as f64)
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. `None` unless both classes occur.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<Option<f64>, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::Contract(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(EvalError::Contract("NaN score".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Ok(None);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Mann-Whitney U from midranks
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(Some(u / (pos as f64 * neg as f64)))
}

/// Mean one-vs-rest AUC over classes present with both signs; `probs[i][c]`.
pub fn macro_auc(
    probs: &[Vec<f64>],
    truth: &[usize],
    classes: usize,
) -> Result<Option<f64>, EvalError> {
    if classes == 2 {
        let s: Vec<f64> = probs.iter().map(|p| p[1]).collect();
        let l: Vec<bool> = truth.iter().map(|&t| t == 1).collect();
        return auc(&s, &l);
    }
    let mut vals = Vec::new();
    for c in 0..classes {
        let s: Vec<f64> = probs.iter().map(|p| p[c]).collect();
        let l: Vec<bool> = truth.iter().map(|&t| t == c).collect();
        if let Some(a) = auc(&s, &l)? {
            vals.push(a);
        }
    }
    Ok((!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64))
}

fn check_pair(preds: &[f64], targets: &[f64]) -> Result<(), EvalError> {
    if preds.is_empty() || preds.len() != targets.len() {
        return Err(EvalError::Contract(format!(
            "need equal nonempty inputs, got {} and {}",
            preds.len(),
            targets.len()
        )));
    }
    Ok(())
}

pub fn rmse(preds: &[f64], targets: &[f64]) -> Result<f64, EvalError> {
    check_pair(preds, targets)?;
    let mse = preds
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / preds.len() as f64;
    Ok(mse.sqrt())
}

pub fn mae(preds: &[f64], targets: &[f64]) -> Result<f64, EvalError> {
    check_pair(preds, targets)?;
    Ok(preds
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / preds.len() as f64)
}

/// Mean `-ln p[truth]` in nats.
pub fn cross_entropy(probs: &[Vec<f64>], truth: &[usize]) -> Result<f64, EvalError> {
    if probs.is_empty() || probs.len() != truth.len() {
        return Err(EvalError::Contract("need equal nonempty inputs".into()));
    }
    Ok(probs
        .iter()
        .zip(truth)
        .map(|(p, &t)| -p[t].ln())
        .sum::<f64>()
        / probs.len() as f64)
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64, EvalError> {
    if pred.is_empty() || pred.len() != truth.len() {
        return Err(EvalError::Contract("need equal nonempty inputs".into()));
    }
    Ok(pred.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn macro_f1_examples() {
        assert_eq!(macro_f1(&[0, 1, 1, 0], &[0, 1, 1, 0], 2).unwrap(), 1.0);
        let v = macro_f1(&[0, 0, 0, 0], &[0, 0, 1, 1], 2).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(macro_f1(&[1, 0], &[0, 1], 2).unwrap(), 0.0);
        assert!(macro_f1(&[0], &[0], 1).is_err());
        assert!(macro_f1(&[0], &[0, 1], 2).is_err());
    }

    #[test]
    fn auc_examples() {
        let l = [false, false, true, true];
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &l).unwrap(), Some(1.0));
        assert_eq!(auc(&[0.5; 4], &l).unwrap(), Some(0.5));
        assert_eq!(auc(&[0.1, 0.4, 0.35, 0.8], &l).unwrap(), Some(0.75));
        assert_eq!(auc(&[0.1, 0.2], &[true, true]).unwrap(), None);
    }

    #[test]
    fn regression_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[1.0, 2.0], &[2.0, 4.0]).unwrap() - 2.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(mae(&[1.0, 2.0], &[2.0, 4.0]).unwrap(), 1.5);
        let t = [0.5, -1.0, 3.0];
        let shifted: Vec<f64> = t.iter().map(|x| x + 0.25).collect();
        assert!((rmse(&shifted, &t).unwrap() - 0.25).abs() < 1e-15);
        assert!((mae(&shifted, &t).unwrap() - 0.25).abs() < 1e-15);
        assert!(rmse(&[], &[]).is_err());
    }

    #[test]
    fn cross_entropy_of_uniform() {
        let v = cross_entropy(&[vec![0.5, 0.5]], &[1]).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
    }
}
