use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;

use super::dist::{check_probability, DiscreteDist};
use super::TheoryError;
use crate::models::EmbeddingTable;
use crate::rng::Rng;

pub const MAX_TRANSPORT_SUPPORT: usize = 64;
pub const MASS_TOL: f64 = 1e-12;

/// Closed form for two Bernoulli laws under the `|i - j|` metric on `{0, 1}`.
pub fn w1_bernoulli(p: f64, q: f64) -> Result<f64, TheoryError> {
    check_probability(p)?;
    check_probability(q)?;
    Ok((p - q).abs())
}

/// Exact W1 between two finite distributions under `metric`.
pub fn w1_discrete(
    p: &DiscreteDist,
    q: &DiscreteDist,
    metric: impl Fn(&[f64], &[f64]) -> f64,
) -> Result<f64, TheoryError> {
    if p.len() > MAX_TRANSPORT_SUPPORT || q.len() > MAX_TRANSPORT_SUPPORT {
        return Err(TheoryError::Contract(format!(
            "transport supports are limited to {MAX_TRANSPORT_SUPPORT} points"
        )));
    }
    let cost: Vec<Vec<f64>> = p
        .support()
        .iter()
        .map(|x| q.support().iter().map(|y| metric(x, y)).collect())
        .collect();
    transport_cost(p.probs(), q.probs(), &cost)
}

struct FlowArc {
    to: usize,
    cap: f64,
    cost: f64,
}

/// Minimum-cost transport of `supply` onto `demand` with unit costs `cost[i][j]`,
/// solved as min-cost flow by successive shortest paths. Shortest paths come
/// from Bellman-Ford (queue form) on the residual network, which carries
/// negative reverse arcs but no negative cycles.
pub fn transport_cost(
    supply: &[f64],
    demand: &[f64],
    cost: &[Vec<f64>],
) -> Result<f64, TheoryError> {
    let (n, m) = (supply.len(), demand.len());
    if cost.len() != n || cost.iter().any(|r| r.len() != m) {
        return Err(TheoryError::Contract(
            "cost matrix does not match supply and demand".into(),
        ));
    }
    if supply.iter().chain(demand).any(|&v| !(v >= 0.0)) {
        return Err(TheoryError::Contract("negative or NaN mass".into()));
    }
    if cost.iter().flatten().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(TheoryError::Contract(
            "costs must be finite and nonnegative".into(),
        ));
    }
    let (total_s, total_d): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
    if (total_s - total_d).abs() > MASS_TOL {
        return Err(TheoryError::Contract(format!(
            "infeasible transport: supply {total_s} vs demand {total_d}"
        )));
    }

    let source = 0;
    let sink = n + m + 1;
    let nodes = n + m + 2;
    let mut arcs: Vec<FlowArc> = Vec::new();
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let mut add = |arcs: &mut Vec<FlowArc>, u: usize, v: usize, cap: f64, c: f64| {
        out[u].push(arcs.len());
        arcs.push(FlowArc {
            to: v,
            cap,
            cost: c,
        });
        out[v].push(arcs.len());
        arcs.push(FlowArc {
            to: u,
            cap: 0.0,
            cost: -c,
        });
    };
    for (i, &s) in supply.iter().enumerate() {
        add(&mut arcs, source, 1 + i, s, 0.0);
    }
    for (j, &d) in demand.iter().enumerate() {
        add(&mut arcs, 1 + n + j, sink, d, 0.0);
    }
    for (i, row) in cost.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            add(&mut arcs, 1 + i, 1 + n + j, f64::INFINITY, c);
        }
    }

    // residual capacity below this is treated as saturated
    const CAP_EPS: f64 = 1e-15;
    const DIST_EPS: f64 = 1e-13;
    let mut total = 0.0;
    let mut dist = vec![f64::INFINITY; nodes];
    let mut via = vec![usize::MAX; nodes];
    let mut queued = vec![false; nodes];
    let mut visits = vec![0usize; nodes];
    loop {
        dist.fill(f64::INFINITY);
        via.fill(usize::MAX);
        visits.fill(0);
        dist[source] = 0.0;
        let mut queue = VecDeque::from([source]);
        queued[source] = true;
        while let Some(u) = queue.pop_front() {
            queued[u] = false;
            visits[u] += 1;
            if visits[u] > nodes {
                // only reachable through rounding-level cycles
                continue;
            }
            for &a in &out[u] {
                let arc = &arcs[a];
                if arc.cap > CAP_EPS && dist[u] + arc.cost < dist[arc.to] - DIST_EPS {
                    dist[arc.to] = dist[u] + arc.cost;
                    via[arc.to] = a;
                    if !queued[arc.to] {
                        queued[arc.to] = true;
                        queue.push_back(arc.to);
                    }
                }
            }
        }
        if !dist[sink].is_finite() {
            break;
        }
        let mut push = f64::INFINITY;
        let mut v = sink;
        while v != source {
            let a = via[v];
            push = push.min(arcs[a].cap);
            v = arcs[a ^ 1].to;
        }
        let mut v = sink;
        while v != source {
            let a = via[v];
            arcs[a].cap -= push;
            arcs[a ^ 1].cap += push;
            total += push * arcs[a].cost;
            v = arcs[a ^ 1].to;
        }
    }
    Ok(total.max(0.0))
}

/// Exact W1 between two equal-size empirical samples on the real line.
pub fn w1_sorted_1d(samples0: &[f64], samples1: &[f64]) -> Result<f64, TheoryError> {
    if samples0.len() != samples1.len() {
        return Err(TheoryError::Contract(format!(
            "sample sizes differ: {} vs {}",
            samples0.len(),
            samples1.len()
        )));
    }
    if samples0.is_empty() {
        return Err(TheoryError::Contract("empty samples".into()));
    }
    let mut a = samples0.to_vec();
    let mut b = samples1.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

/// Sliced W1 between the embeddings of attribute groups 0 and 1, averaged over
/// `projections` random unit directions. The larger group is subsampled to
/// the size of the smaller one.
pub fn estimate_w1_embeddings(
    z: &EmbeddingTable,
    labels: &[usize],
    projections: usize,
    rng: &mut Rng,
) -> Result<f64, TheoryError> {
    if labels.len() != z.node_count() {
        return Err(TheoryError::Contract(format!(
            "{} labels for {} embeddings",
            labels.len(),
            z.node_count()
        )));
    }
    if projections == 0 {
        return Err(TheoryError::Contract(
            "at least one projection is required".into(),
        ));
    }
    let mut g0: Vec<usize> = (0..labels.len()).filter(|&v| labels[v] == 0).collect();
    let mut g1: Vec<usize> = (0..labels.len()).filter(|&v| labels[v] == 1).collect();
    if g0.is_empty() || g1.is_empty() {
        return Err(TheoryError::Contract(
            "both attribute groups must be nonempty".into(),
        ));
    }
    let size = g0.len().min(g1.len());
    g0.shuffle(rng);
    g1.shuffle(rng);
    g0.truncate(size);
    g1.truncate(size);

    let dim = z.dim();
    let mut acc = 0.0;
    for _ in 0..projections {
        let mut dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            dir.iter_mut().for_each(|x| *x /= norm);
        } else {
            dir[0] = 1.0;
        }
        let project = |v: &usize| z.row(*v).iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>();
        let s0: Vec<f64> = g0.iter().map(project).collect();
        let s1: Vec<f64> = g1.iter().map(project).collect();
        acc += w1_sorted_1d(&s0, &s1)?;
    }
    Ok(acc / projections as f64)
}

#[cfg(test)]
mod tests {
    use rand::Rng as _;

    use super::*;
    use crate::autodiff::Tensor;
    use crate::rng::{stream, Stream};
    use crate::theory::dist::euclidean;

    #[test]
    fn bernoulli_examples() {
        assert!((w1_bernoulli(0.3, 0.7).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(w1_bernoulli(0.2, 0.2).unwrap(), 0.0);
        assert_eq!(w1_bernoulli(0.0, 1.0).unwrap(), 1.0);
        assert!(w1_bernoulli(1.5, 0.0).is_err());
    }

    #[test]
    fn unit_shift() {
        let p = DiscreteDist::on_line(&[0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let q = DiscreteDist::on_line(&[1.0, 2.0], vec![0.5, 0.5]).unwrap();
        assert!((w1_discrete(&p, &q, euclidean).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flow_matches_bernoulli_closed_form() {
        let p = DiscreteDist::bernoulli(0.3).unwrap();
        let q = DiscreteDist::bernoulli(0.7).unwrap();
        assert!((w1_discrete(&p, &q, euclidean).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn sorted_examples() {
        assert_eq!(w1_sorted_1d(&[3.0, 1.0], &[1.0, 3.0]).unwrap(), 0.0);
        assert_eq!(w1_sorted_1d(&[0.0, 1.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert!(
            (w1_sorted_1d(&[0.0, 0.0, 1.0], &[1.0, 1.0, 1.0]).unwrap() - 2.0 / 3.0).abs() < 1e-15
        );
        assert!(w1_sorted_1d(&[0.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn flow_matches_sorted_oracle_on_equal_weight_atoms() {
        let mut rng = stream(11, Stream::Theory);
        for _ in 0..50 {
            let n = rng.random_range(1..=20);
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let p = DiscreteDist::on_line(&a, vec![1.0 / n as f64; n]).unwrap();
            let q = DiscreteDist::on_line(&b, vec![1.0 / n as f64; n]).unwrap();
            let flow = w1_discrete(&p, &q, euclidean).unwrap();
            assert!((flow - w1_sorted_1d(&a, &b).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_mass_mismatch() {
        assert!(transport_cost(&[1.0], &[0.5], &[vec![1.0]]).is_err());
    }

    fn table(rows: Vec<Vec<f64>>) -> EmbeddingTable {
        EmbeddingTable(Tensor::from_rows(&rows))
    }

    #[test]
    fn sliced_estimate_on_identical_groups_is_zero() {
        let mut rng = stream(3, Stream::Theory);
        let base: Vec<Vec<f64>> = (0..500)
            .map(|_| (0..4).map(|_| rng.random::<f64>()).collect())
            .collect();
        let rows: Vec<Vec<f64>> = base.iter().chain(base.iter().rev()).cloned().collect();
        let labels: Vec<usize> = (0..1000).map(|i| usize::from(i >= 500)).collect();
        let est = estimate_w1_embeddings(&table(rows), &labels, 50, &mut rng).unwrap();
        assert!(est <= 0.02, "{est}");
    }

    #[test]
    fn sliced_estimate_recovers_translation() {
        use rand_distr::StandardNormal;
        let mut rng = stream(4, Stream::Theory);
        let t = 3.0;
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..1000 {
            let a = usize::from(i % 2 == 1);
            let x: f64 = rng.sample(StandardNormal);
            rows.push(vec![x + t * a as f64]);
            labels.push(a);
        }
        let est = estimate_w1_embeddings(&table(rows), &labels, 10, &mut rng).unwrap();
        assert!((est - t).abs() <= 0.05 * t, "{est}");
    }

    #[test]
    fn sliced_estimate_needs_both_groups() {
        let mut rng = stream(5, Stream::Theory);
        let z = table(vec![vec![0.0], vec![1.0]]);
        assert!(estimate_w1_embeddings(&z, &[0, 0], 5, &mut rng).is_err());
    }
}
