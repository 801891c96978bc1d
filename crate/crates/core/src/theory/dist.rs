use super::TheoryError;

/// Finite distribution over points of `R^d`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DiscreteDist {
    support: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

pub const NORMALIZATION_TOL: f64 = 1e-12;

impl DiscreteDist {
    pub fn new(support: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self, TheoryError> {
        if support.is_empty() || support.len() != probs.len() {
            return Err(TheoryError::Contract(format!(
                "{} support points for {} probabilities",
                support.len(),
                probs.len()
            )));
        }
        let dim = support[0].len();
        if support
            .iter()
            .any(|p| p.len() != dim || p.iter().any(|x| !x.is_finite()))
        {
            return Err(TheoryError::Contract(
                "support points must share one finite dimension".into(),
            ));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(TheoryError::Contract("negative or NaN probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(TheoryError::Contract(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { support, probs })
    }

    /// Distribution on the real points `xs`.
    pub fn on_line(xs: &[f64], probs: Vec<f64>) -> Result<Self, TheoryError> {
        Self::new(xs.iter().map(|&x| vec![x]).collect(), probs)
    }

    /// Normalises non-negative `weights` first.
    pub fn from_weights(support: Vec<Vec<f64>>, weights: &[f64]) -> Result<Self, TheoryError> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(TheoryError::Contract(
                "weights must have positive total mass".into(),
            ));
        }
        Self::new(support, weights.iter().map(|w| w / total).collect())
    }

    pub fn bernoulli(p: f64) -> Result<Self, TheoryError> {
        check_probability(p)?;
        Self::on_line(&[0.0, 1.0], vec![1.0 - p, p])
    }

    pub fn support(&self) -> &[Vec<f64>] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Image of the distribution under a point map (atoms may merge).
    pub fn pushforward(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self, TheoryError> {
        let mut support: Vec<Vec<f64>> = Vec::new();
        let mut probs: Vec<f64> = Vec::new();
        for (x, &p) in self.support.iter().zip(&self.probs) {
            let y = f(x);
            match support.iter().position(|s| *s == y) {
                Some(i) => probs[i] += p,
                None => {
                    support.push(y);
                    probs.push(p);
                }
            }
        }
        let total: f64 = probs.iter().sum();
        Self::new(support, probs.into_iter().map(|p| p / total).collect())
    }
}

pub(crate) fn check_probability(p: f64) -> Result<(), TheoryError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(TheoryError::Contract(format!("{p} is not a probability")))
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn same_support(p: &DiscreteDist, q: &DiscreteDist) -> Result<(), TheoryError> {
    if p.support != q.support {
        return Err(TheoryError::Contract(
            "distributions must share the same support".into(),
        ));
    }
    Ok(())
}

/// `1/2 * sum |p_i - q_i|`.
pub fn tv_distance(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64, TheoryError> {
    same_support(p, q)?;
    Ok(0.5
        * p.probs
            .iter()
            .zip(&q.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

pub const MAX_ENUMERATED_SUPPORT: usize = 16;

fn enumerate_classifiers<'a>(
    p: &'a DiscreteDist,
    q: &'a DiscreteDist,
) -> Result<impl Iterator<Item = (f64, f64)> + 'a, TheoryError> {
    same_support(p, q)?;
    let n = p.len();
    if n > MAX_ENUMERATED_SUPPORT {
        return Err(TheoryError::Contract(format!(
            "support of {n} points exceeds the enumeration limit {MAX_ENUMERATED_SUPPORT}"
        )));
    }
    // (Pr_p(f = 1), Pr_q(f = 1)) for every f: support -> {0, 1}
    Ok((0u32..1 << n).map(move |mask| {
        let mut pp = 0.0;
        let mut qq = 0.0;
        for i in 0..n {
            if mask >> i & 1 == 1 {
                pp += p.probs[i];
                qq += q.probs[i];
            }
        }
        (pp, qq)
    }))
}

/// Largest `|Pr_q(f = 1) - Pr_p(f = 1)|` over all binary classifiers on the support.
pub fn advantage_bruteforce(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64, TheoryError> {
    Ok(enumerate_classifiers(p, q)?.fold(0.0, |m, (a, b)| m.max((b - a).abs())))
}

/// Minimum over classifiers of the summed type-I and type-II errors,
/// `Pr_p(f = 1) + Pr_q(f = 0)`.
pub fn min_error_sum(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64, TheoryError> {
    Ok(enumerate_classifiers(p, q)?.fold(f64::INFINITY, |m, (a, b)| m.min(a + (1.0 - b))))
}

/// Whether `1 - advantage` equals the best summed error within `1e-12`.
pub fn check_error_decomposition(p: &DiscreteDist, q: &DiscreteDist) -> Result<bool, TheoryError> {
    let gap = (1.0 - advantage_bruteforce(p, q)?) - min_error_sum(p, q)?;
    Ok(gap.abs() <= 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two(a: f64, b: f64) -> DiscreteDist {
        DiscreteDist::on_line(&[0.0, 1.0], vec![a, b]).unwrap()
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_distance(&two(0.3, 0.7), &two(0.3, 0.7)).unwrap(), 0.0);
        assert_eq!(tv_distance(&two(1.0, 0.0), &two(0.0, 1.0)).unwrap(), 1.0);
        assert!((tv_distance(&two(0.2, 0.8), &two(0.5, 0.5)).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn advantage_examples() {
        assert_eq!(
            advantage_bruteforce(&two(0.4, 0.6), &two(0.4, 0.6)).unwrap(),
            0.0
        );
        assert_eq!(
            advantage_bruteforce(&two(1.0, 0.0), &two(0.0, 1.0)).unwrap(),
            1.0
        );
        // classifiers {}, {0}, {1}, {0,1} give gaps 0, 0.5, 0.5, 0
        assert_eq!(
            advantage_bruteforce(&two(0.75, 0.25), &two(0.25, 0.75)).unwrap(),
            0.5
        );
    }

    #[test]
    fn decomposition_extremes() {
        let p = two(0.3, 0.7);
        assert!((min_error_sum(&p, &p).unwrap() - 1.0).abs() < 1e-15);
        assert!(check_error_decomposition(&p, &p).unwrap());
        let (a, b) = (two(1.0, 0.0), two(0.0, 1.0));
        assert_eq!(min_error_sum(&a, &b).unwrap(), 0.0);
        assert!(check_error_decomposition(&a, &b).unwrap());
    }

    #[test]
    fn contract_errors() {
        assert!(DiscreteDist::on_line(&[0.0, 1.0], vec![0.5, 0.6]).is_err());
        assert!(DiscreteDist::on_line(&[0.0, 1.0], vec![-0.5, 1.5]).is_err());
        let other = DiscreteDist::on_line(&[0.0, 2.0], vec![0.5, 0.5]).unwrap();
        assert!(tv_distance(&two(0.5, 0.5), &other).is_err());
        let xs: Vec<f64> = (0..17).map(f64::from).collect();
        let big = DiscreteDist::on_line(&xs, vec![1.0 / 17.0; 17]).unwrap();
        assert!(advantage_bruteforce(&big, &big).is_err());
    }

    #[test]
    fn pushforward_merges_atoms() {
        let p = DiscreteDist::on_line(&[-1.0, 1.0, 2.0], vec![0.25, 0.25, 0.5]).unwrap();
        let sq = p.pushforward(|x| vec![x[0] * x[0]]).unwrap();
        assert_eq!(sq.support(), &[vec![1.0], vec![4.0]]);
        assert_eq!(sq.probs(), &[0.5, 0.5]);
    }
}
