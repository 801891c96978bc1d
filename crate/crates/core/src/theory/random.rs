//! Randomized instance generators. Every generator is a pure function of the
//! RNG it is handed, so a failing instance is reproduced from its seed alone.

use rand::Rng as _;
use rand_distr::{Distribution, Gamma};

use super::bounds::{empirical_lipschitz, BoundInstance};
use super::dist::DiscreteDist;
use super::TheoryError;
use crate::rng::Rng;

/// Draw from a symmetric Dirichlet with the given concentration.
pub fn dirichlet(rng: &mut Rng, k: usize, concentration: f64) -> Vec<f64> {
    let gamma = Gamma::new(concentration, 1.0).expect("positive concentration");
    loop {
        let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 {
            return draws.into_iter().map(|x| x / total).collect();
        }
    }
}

fn concentration(rng: &mut Rng) -> f64 {
    [0.2, 0.5, 1.0, 3.0][rng.random_range(0..4)]
}

/// Distinct points of `[-1, 1]^dim`.
fn random_points(rng: &mut Rng, count: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(count);
    while pts.len() < count {
        let p: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        if !pts.contains(&p) {
            pts.push(p);
        }
    }
    pts
}

/// Two distributions on a shared support of `1..=max_support` points in `dim` dimensions.
pub fn random_dist_pair(
    rng: &mut Rng,
    max_support: usize,
    dim: usize,
) -> Result<(DiscreteDist, DiscreteDist), TheoryError> {
    let n = rng.random_range(1..=max_support);
    let support = random_points(rng, n, dim);
    let c = concentration(rng);
    let p = DiscreteDist::from_weights(support.clone(), &dirichlet(rng, n, c))?;
    let q = DiscreteDist::from_weights(support, &dirichlet(rng, n, c))?;
    Ok((p, q))
}

fn random_joint(rng: &mut Rng, n: usize) -> Vec<[[f64; 2]; 2]> {
    let c = concentration(rng);
    let mut w = dirichlet(rng, 4 * n, c);
    // bias toward Y = A on a random fraction of instances so that delta is often large
    let tie = rng.random_range(0.0..1.0);
    for z in 0..n {
        for a in 0..2 {
            let (keep, other) = (4 * z + 2 * a + a, 4 * z + 2 * a + (1 - a));
            let moved = w[other] * tie;
            w[other] -= moved;
            w[keep] += moved;
        }
    }
    let total: f64 = w.iter().sum();
    (0..n)
        .map(|z| {
            let cell = |a: usize, y: usize| w[4 * z + 2 * a + y] / total;
            [[cell(0, 0), cell(0, 1)], [cell(1, 0), cell(1, 1)]]
        })
        .collect()
}

fn radius_of(support: &[Vec<f64>], rng: &mut Rng) -> f64 {
    let max = support
        .iter()
        .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    max * rng.random_range(1.0..1.5)
}

fn has_both_groups(joint: &[[[f64; 2]; 2]]) -> bool {
    (0..2).all(|a| joint.iter().map(|t| t[a][0] + t[a][1]).sum::<f64>() > 0.0)
}

/// Instance plus a soft classifier `h` meeting the instance's Lipschitz constant.
pub fn random_tradeoff_case(
    rng: &mut Rng,
    max_support: usize,
) -> Result<(BoundInstance, Vec<f64>), TheoryError> {
    loop {
        let n = rng.random_range(1..=max_support);
        let dim = rng.random_range(1..=3);
        let support = random_points(rng, n, dim);
        let joint = random_joint(rng, n);
        if !has_both_groups(&joint) {
            continue;
        }
        let c = rng.random_range(0.05..4.0);
        let radius = radius_of(&support, rng);
        let mut h: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..0.99)).collect();
        let lip = empirical_lipschitz(&support, &h);
        if lip > c {
            // shrink toward 1/2 until the classifier is C-Lipschitz
            let s = c / lip * (1.0 - 1e-9);
            h.iter_mut().for_each(|v| *v = 0.5 + (*v - 0.5) * s);
        }
        let inst = BoundInstance::new(support, joint, c, radius)?;
        return Ok((inst, h));
    }
}

/// Instance on a one-dimensional support of `1..=max_support` points.
pub fn random_leakage_instance(
    rng: &mut Rng,
    max_support: usize,
) -> Result<BoundInstance, TheoryError> {
    loop {
        let n = rng.random_range(1..=max_support);
        let support = random_points(rng, n, 1);
        let joint = random_joint(rng, n);
        if !has_both_groups(&joint) {
            continue;
        }
        let c = rng.random_range(0.05..4.0);
        let radius = radius_of(&support, rng);
        return BoundInstance::new(support, joint, c, radius);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn dirichlet_is_normalized() {
        let mut rng = stream(1, Stream::Theory);
        for k in 1..10 {
            let p = dirichlet(&mut rng, k, 0.3);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn generators_are_seed_deterministic() {
        let a = random_tradeoff_case(&mut stream(9, Stream::Theory), 12).unwrap();
        let b = random_tradeoff_case(&mut stream(9, Stream::Theory), 12).unwrap();
        assert_eq!(a.0.joint, b.0.joint);
        assert_eq!(a.1, b.1);
    }
}
