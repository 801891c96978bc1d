use super::TheoryError;

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// `H2(p)` in bits.
pub fn binary_entropy_bits(p: f64) -> f64 {
    -(plogp(p) + plogp(1.0 - p))
}

/// `H(A | Z)` in bits for a joint table with one row per `z` and one column per `a`.
pub fn conditional_entropy_bits(joint: &[Vec<f64>]) -> Result<f64, TheoryError> {
    let cells = joint.iter().flatten();
    if joint.is_empty() || cells.clone().any(|&p| !(p >= 0.0)) {
        return Err(TheoryError::Contract(
            "joint table must be nonempty and nonnegative".into(),
        ));
    }
    let total: f64 = cells.sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(TheoryError::Contract(format!(
            "joint table sums to {total}"
        )));
    }
    let mut h = 0.0;
    for row in joint {
        let pz: f64 = row.iter().sum();
        if pz > 0.0 {
            h -= row.iter().map(|&p| plogp(p / pz)).sum::<f64>() * pz;
        }
    }
    Ok(h.max(0.0))
}

/// Lower bound `s / (2 lg(6 / s))` on the inverse binary entropy at `s`.
pub fn inv_entropy_lower_bound(s: f64) -> Result<f64, TheoryError> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(TheoryError::Contract(format!("{s} is outside (0, 1]")));
    }
    Ok(s / (2.0 * (6.0 / s).log2()))
}
