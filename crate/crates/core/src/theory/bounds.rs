use serde::Serialize;

use super::dist::{euclidean, DiscreteDist, MAX_ENUMERATED_SUPPORT};
use super::entropy::{conditional_entropy_bits, inv_entropy_lower_bound};
use super::wasserstein::w1_discrete;
use super::{advantage_bruteforce, TheoryError};

pub const BOUND_TOL: f64 = 1e-9;
/// Output grid for the Lipschitz adversary family: multiples of `1/64` in `[0, 1]`.
pub const LIPSCHITZ_GRID: usize = 64;

/// Small discrete problem over embeddings `Z`, a binary sensitive attribute `A`
/// and a binary target `Y`. `joint[z][a][y]` holds `Pr(Z = z, A = a, Y = y)`.
#[derive(Clone, Debug, Serialize)]
pub struct BoundInstance {
    pub support: Vec<Vec<f64>>,
    pub joint: Vec<[[f64; 2]; 2]>,
    pub lipschitz: f64,
    pub radius: f64,
    pub alpha: f64,
    pub delta: f64,
    pub h_star: f64,
    pub w1_star: f64,
}

impl BoundInstance {
    pub fn new(
        support: Vec<Vec<f64>>,
        joint: Vec<[[f64; 2]; 2]>,
        lipschitz: f64,
        radius: f64,
    ) -> Result<Self, TheoryError> {
        if support.is_empty() || support.len() != joint.len() {
            return Err(TheoryError::Contract(
                "joint table must have one entry per support point".into(),
            ));
        }
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(TheoryError::Contract(format!(
                "invalid Lipschitz constant {lipschitz}"
            )));
        }
        for (i, x) in support.iter().enumerate() {
            let norm = euclidean(x, &vec![0.0; x.len()]);
            if norm > radius + 1e-12 {
                return Err(TheoryError::Contract(format!(
                    "support point {i} has norm {norm} > R = {radius}"
                )));
            }
            if support[..i].contains(x) {
                return Err(TheoryError::Contract(format!(
                    "support point {i} is repeated"
                )));
            }
        }
        let cells = joint.iter().flat_map(|t| t.iter().flatten());
        if cells.clone().any(|&p| !(p >= 0.0)) {
            return Err(TheoryError::Contract(
                "joint table has negative or NaN mass".into(),
            ));
        }
        let total: f64 = cells.sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(TheoryError::Contract(format!(
                "joint table sums to {total}"
            )));
        }
        let mass = |a: usize| joint.iter().map(|t| t[a][0] + t[a][1]).sum::<f64>();
        let (m0, m1) = (mass(0), mass(1));
        if m0 <= 0.0 || m1 <= 0.0 {
            return Err(TheoryError::Contract(
                "both attribute groups need positive mass".into(),
            ));
        }
        let positive = |a: usize| joint.iter().map(|t| t[a][1]).sum::<f64>();
        let delta = (positive(0) / m0 - positive(1) / m1).abs();
        let za: Vec<Vec<f64>> = joint
            .iter()
            .map(|t| vec![t[0][0] + t[0][1], t[1][0] + t[1][1]])
            .collect();
        let h_star = conditional_entropy_bits(&za)?;
        let mut inst = Self {
            support,
            joint,
            lipschitz,
            radius,
            alpha: m0 / total,
            delta,
            h_star,
            w1_star: 0.0,
        };
        inst.w1_star = w1_discrete(&inst.conditional(0)?, &inst.conditional(1)?, euclidean)?;
        Ok(inst)
    }

    /// Law of `Z` given `A = a`.
    pub fn conditional(&self, a: usize) -> Result<DiscreteDist, TheoryError> {
        let weights: Vec<f64> = self.joint.iter().map(|t| t[a][0] + t[a][1]).collect();
        DiscreteDist::from_weights(self.support.clone(), &weights)
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }
}

/// Largest pairwise ratio `|h(x) - h(y)| / d(x, y)` on the support.
pub fn empirical_lipschitz(support: &[Vec<f64>], h: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..support.len() {
        for j in 0..i {
            let d = euclidean(&support[i], &support[j]);
            worst = worst.max((h[i] - h[j]).abs() / d);
        }
    }
    worst
}

#[derive(Clone, Debug, Serialize)]
pub struct TradeoffRecord {
    /// Cross-entropy (nats) of `h` on group 0 plus group 1.
    pub lhs: f64,
    /// Same sum measured by expected absolute error `E|Y - h(Z)|`.
    pub lhs_abs: f64,
    pub rhs_w1: f64,
    pub rhs_adv: f64,
    pub w1: f64,
    pub adv: f64,
    /// Cross-entropy on the whole population.
    pub overall_error: f64,
    pub group_errors: [f64; 2],
    pub holds: bool,
    pub slack: f64,
}

/// Evaluates the cross-entropy trade-off chain for the soft classifier
/// `h[z] = Pr(Y_hat = 1 | Z = z)`: the conditional errors sum to at least
/// `delta - C W1`, which is itself at least `delta - 2 R C Adv`.
pub fn check_tradeoff_bound(
    inst: &BoundInstance,
    h: &[f64],
) -> Result<TradeoffRecord, TheoryError> {
    if h.len() != inst.len() {
        return Err(TheoryError::Contract(format!(
            "{} classifier values for {} points",
            h.len(),
            inst.len()
        )));
    }
    if h.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
        return Err(TheoryError::Contract(
            "classifier outputs must lie in (0, 1)".into(),
        ));
    }
    let lip = empirical_lipschitz(&inst.support, h);
    if lip > inst.lipschitz * (1.0 + 1e-12) + 1e-12 {
        return Err(TheoryError::Contract(format!(
            "classifier is {lip}-Lipschitz, above C = {}",
            inst.lipschitz
        )));
    }
    let mut ce = [0.0; 2];
    let mut abs = [0.0; 2];
    let mut mass = [0.0; 2];
    for (t, &hz) in inst.joint.iter().zip(h) {
        for a in 0..2 {
            ce[a] += -t[a][1] * hz.ln() - t[a][0] * (1.0 - hz).ln();
            abs[a] += t[a][1] * (1.0 - hz) + t[a][0] * hz;
            mass[a] += t[a][0] + t[a][1];
        }
    }
    let group_errors = [ce[0] / mass[0], ce[1] / mass[1]];
    let lhs = group_errors[0] + group_errors[1];
    let lhs_abs = abs[0] / mass[0] + abs[1] / mass[1];
    let w1 = inst.w1_star;
    let adv = advantage_bruteforce(&inst.conditional(0)?, &inst.conditional(1)?)?;
    let rhs_w1 = inst.delta - inst.lipschitz * w1;
    let rhs_adv = inst.delta - 2.0 * inst.radius * inst.lipschitz * adv;
    let slack = (lhs_abs - rhs_w1).min(rhs_w1 - rhs_adv);
    Ok(TradeoffRecord {
        lhs,
        lhs_abs,
        rhs_w1,
        rhs_adv,
        w1,
        adv,
        overall_error: ce[0] + ce[1],
        group_errors,
        holds: lhs >= rhs_w1 - BOUND_TOL && slack >= -BOUND_TOL,
        slack,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LeakageRecord {
    pub min_error_all: f64,
    pub bound_entropy: f64,
    pub min_error_lipschitz: f64,
    pub bound_w1: f64,
    pub holds: bool,
    pub slack: f64,
}

/// Smallest `Pr(f(Z) != A)` over every deterministic `f: support -> {0, 1}`.
fn min_error_deterministic(inst: &BoundInstance) -> f64 {
    let n = inst.len();
    let mass: Vec<[f64; 2]> = inst
        .joint
        .iter()
        .map(|t| [t[0][0] + t[0][1], t[1][0] + t[1][1]])
        .collect();
    let mut best = f64::INFINITY;
    for mask in 0u32..1 << n {
        let err: f64 = (0..n).map(|i| mass[i][1 - (mask >> i & 1) as usize]).sum();
        best = best.min(err);
    }
    best
}

/// Smallest error of a soft adversary `f: support -> {k / 64}` with
/// `|f(x) - f(y)| <= C |x - y|`, by dynamic programming over the sorted line.
fn min_error_lipschitz_grid(inst: &BoundInstance) -> Result<f64, TheoryError> {
    if inst.support.iter().any(|x| x.len() != 1) {
        return Err(TheoryError::Contract(
            "the Lipschitz adversary search needs a one-dimensional support".into(),
        ));
    }
    let mut order: Vec<usize> = (0..inst.len()).collect();
    order.sort_by(|&a, &b| inst.support[a][0].total_cmp(&inst.support[b][0]));
    let levels = LIPSCHITZ_GRID + 1;
    let value = |k: usize| k as f64 / LIPSCHITZ_GRID as f64;
    let cost = |i: usize, k: usize| {
        let t = &inst.joint[i];
        (t[0][0] + t[0][1]) * value(k) + (t[1][0] + t[1][1]) * (1.0 - value(k))
    };
    let mut best: Vec<f64> = (0..levels).map(|k| cost(order[0], k)).collect();
    for w in order.windows(2) {
        let gap = inst.lipschitz * (inst.support[w[1]][0] - inst.support[w[0]][0]);
        let next: Vec<f64> = (0..levels)
            .map(|k| {
                let reach = (0..levels)
                    .filter(|&j| (value(j) - value(k)).abs() <= gap + 1e-12)
                    .map(|j| best[j])
                    .fold(f64::INFINITY, f64::min);
                reach + cost(w[1], k)
            })
            .collect();
        best = next;
    }
    Ok(best.into_iter().fold(f64::INFINITY, f64::min))
}

/// Checks both leakage lower bounds: the best deterministic adversary errs at
/// least `H* / (2 lg(6 / H*))`, and the best C-Lipschitz soft adversary errs at
/// least `min(alpha, 1 - alpha) (1 - C W1*)`.
pub fn check_leakage_bound(inst: &BoundInstance) -> Result<LeakageRecord, TheoryError> {
    if inst.len() > MAX_ENUMERATED_SUPPORT {
        return Err(TheoryError::Contract(format!(
            "support of {} points exceeds the enumeration limit {MAX_ENUMERATED_SUPPORT}",
            inst.len()
        )));
    }
    let min_error_all = min_error_deterministic(inst);
    let bound_entropy = if inst.h_star > 0.0 {
        inv_entropy_lower_bound(inst.h_star.min(1.0))?
    } else {
        0.0
    };
    let min_error_lipschitz = min_error_lipschitz_grid(inst)?;
    let bound_w1 = inst.alpha.min(1.0 - inst.alpha) * (1.0 - inst.lipschitz * inst.w1_star);
    let slack = (min_error_all - bound_entropy).min(min_error_lipschitz - bound_w1);
    Ok(LeakageRecord {
        min_error_all,
        bound_entropy,
        min_error_lipschitz,
        bound_w1,
        holds: slack >= -BOUND_TOL,
        slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn rejects_points_outside_radius_and_bad_tables() {
        let j = vec![[[0.25, 0.25], [0.25, 0.25]]];
        assert!(BoundInstance::new(line(&[2.0]), j.clone(), 1.0, 1.0).is_err());
        assert!(
            BoundInstance::new(line(&[0.5]), vec![[[0.5, 0.5], [0.0, 0.0]]], 1.0, 1.0).is_err()
        );
        assert!(
            BoundInstance::new(line(&[0.5]), vec![[[0.5, 0.5], [0.5, 0.0]]], 1.0, 1.0).is_err()
        );
        assert!(BoundInstance::new(line(&[0.5]), j, 1.0, 1.0).is_ok());
    }

    #[test]
    fn delta_recomputes_from_joint() {
        // Pr(Y=1 | A=0) = 0.2, Pr(Y=1 | A=1) = 0.9
        let j = vec![[[0.2, 0.05], [0.0, 0.3]], [[0.2, 0.05], [0.05, 0.15]]];
        let inst = BoundInstance::new(line(&[0.0, 1.0]), j, 1.0, 1.0).unwrap();
        assert!((inst.delta - 0.7).abs() < 1e-12);
        assert!((inst.alpha - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_embedding_with_y_equal_a() {
        let inst =
            BoundInstance::new(vec![vec![0.0]], vec![[[0.5, 0.0], [0.0, 0.5]]], 1.0, 1.0).unwrap();
        assert_eq!(inst.delta, 1.0);
        assert_eq!(inst.w1_star, 0.0);
        for &h in &[0.01, 0.3, 0.5, 0.9] {
            let rec = check_tradeoff_bound(&inst, &[h]).unwrap();
            assert!(rec.lhs >= 1.0 && rec.lhs_abs >= 1.0 - 1e-12);
            assert!(rec.holds);
        }
    }

    #[test]
    fn independent_target_is_vacuous() {
        let j = vec![[[0.125, 0.125], [0.25, 0.25]], [[0.125, 0.125], [0.0, 0.0]]];
        let inst = BoundInstance::new(line(&[-1.0, 1.0]), j, 0.2, 1.0).unwrap();
        assert!(inst.delta.abs() < 1e-15);
        let rec = check_tradeoff_bound(&inst, &[0.4, 0.6]).unwrap();
        assert!(rec.rhs_w1 <= 0.0 && rec.holds);
    }

    #[test]
    fn alpha_weighting_identity() {
        let j = vec![[[0.1, 0.2], [0.05, 0.15]], [[0.2, 0.05], [0.1, 0.15]]];
        let inst = BoundInstance::new(line(&[0.0, 1.0]), j, 1.0, 1.0).unwrap();
        let rec = check_tradeoff_bound(&inst, &[0.3, 0.6]).unwrap();
        let weighted = inst.alpha * rec.group_errors[0] + (1.0 - inst.alpha) * rec.group_errors[1];
        assert!((rec.overall_error - weighted).abs() < 1e-12);
    }

    #[test]
    fn rejects_steep_classifier() {
        let j = vec![[[0.25, 0.0], [0.25, 0.0]], [[0.25, 0.0], [0.25, 0.0]]];
        let inst = BoundInstance::new(line(&[0.0, 0.1]), j, 1.0, 1.0).unwrap();
        assert!(check_tradeoff_bound(&inst, &[0.1, 0.9]).is_err());
    }

    #[test]
    fn constant_embedding_leakage() {
        let inst = BoundInstance::new(
            vec![vec![0.0]],
            vec![[[0.25, 0.25], [0.25, 0.25]]],
            1.0,
            1.0,
        )
        .unwrap();
        let rec = check_leakage_bound(&inst).unwrap();
        assert!((rec.min_error_all - 0.5).abs() < 1e-15);
        assert!((rec.bound_entropy - 1.0 / (2.0 * 6f64.log2())).abs() < 1e-12);
        assert!(rec.holds);
    }

    #[test]
    fn determined_attribute_leakage() {
        let j = vec![[[0.3, 0.1], [0.0, 0.0]], [[0.0, 0.0], [0.4, 0.2]]];
        let inst = BoundInstance::new(line(&[0.0, 1.0]), j, 1.0, 1.0).unwrap();
        let rec = check_leakage_bound(&inst).unwrap();
        assert_eq!(inst.h_star, 0.0);
        assert_eq!(rec.bound_entropy, 0.0);
        assert_eq!(rec.min_error_all, 0.0);
        // C * W1* = 1, so the Lipschitz part is tight at zero as well
        assert!(rec.min_error_lipschitz.abs() < 1e-12);
        assert!(rec.holds);
    }
}
