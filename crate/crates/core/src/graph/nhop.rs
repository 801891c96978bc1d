use std::collections::VecDeque;

use rand::Rng as _;

use super::{Graph, GraphError};
use crate::rng::Rng;

/// Builds a self-avoiding random path of `n` hops from `v`.
///
/// At each step a neighbor of the path's end is drawn uniformly without
/// replacement until one not already on the path turns up. Returns `None`
/// when the end node has no untried neighbor left (including an isolated
/// start). The returned path has `n + 1` distinct, consecutively adjacent nodes.
pub fn nhop_path(
    g: &Graph,
    v: usize,
    n: usize,
    rng: &mut Rng,
) -> Result<Option<Vec<usize>>, GraphError> {
    if n < 1 {
        return Err(GraphError::Contract("hop count must be >= 1".into()));
    }
    if v >= g.node_count() {
        return Err(GraphError::Contract(format!(
            "node {v} out of range 0..{}",
            g.node_count()
        )));
    }
    let mut path = Vec::with_capacity(n + 1);
    path.push(v);
    let mut current = v;
    for _ in 0..n {
        let mut candidates = g.neighbors(current).to_vec();
        let next = loop {
            if candidates.is_empty() {
                return Ok(None);
            }
            let i = rng.random_range(0..candidates.len());
            let e = candidates.swap_remove(i);
            if !path.contains(&e) {
                break e;
            }
        };
        path.push(next);
        current = next;
    }
    Ok(Some(path))
}

/// Endpoint of [`nhop_path`]: a node at graph distance between 1 and `n` from `v`.
pub fn nhop_sample(
    g: &Graph,
    v: usize,
    n: usize,
    rng: &mut Rng,
) -> Result<Option<usize>, GraphError> {
    Ok(nhop_path(g, v, n, rng)?.map(|p| p[p.len() - 1]))
}

/// Hop distances from `v` to every node (`None` when unreachable).
pub fn bfs_distances(g: &Graph, v: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.node_count()];
    let mut queue = VecDeque::new();
    dist[v] = Some(0);
    queue.push_back(v);
    while let Some(u) = queue.pop_front() {
        let d = dist[u].unwrap();
        for &w in g.neighbors(u) {
            if dist[w].is_none() {
                dist[w] = Some(d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

pub fn bfs_distance(g: &Graph, v: usize, w: usize) -> Option<usize> {
    bfs_distances(g, v)[w]
}

#[cfg(test)]
mod tests {
    use rand::Rng as _;

    use super::*;
    use crate::graph::fixtures::{path, plain};
    use crate::rng::{stream, Stream};

    fn floyd_warshall(g: &Graph) -> Vec<Vec<Option<usize>>> {
        let n = g.node_count();
        let mut d = vec![vec![None; n]; n];
        for i in 0..n {
            d[i][i] = Some(0);
            for &j in g.neighbors(i) {
                d[i][j] = Some(1);
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                        if d[i][j].is_none_or(|c| a + b < c) {
                            d[i][j] = Some(a + b);
                        }
                    }
                }
            }
        }
        d
    }

    #[test]
    fn path_graph_two_hops_is_forced() {
        let g = path(4);
        let mut rng = stream(0, Stream::Sampler);
        for _ in 0..50 {
            assert_eq!(nhop_sample(&g, 0, 2, &mut rng).unwrap(), Some(2));
        }
        assert_eq!(bfs_distance(&g, 0, 3), Some(3));
        assert_eq!(bfs_distance(&g, 2, 2), Some(0));
    }

    #[test]
    fn triangle_two_hops_lands_at_distance_one() {
        let g = plain(3, &[(0, 1), (1, 2), (0, 2)]);
        let mut rng = stream(1, Stream::Sampler);
        for _ in 0..50 {
            let w = nhop_sample(&g, 0, 2, &mut rng).unwrap().unwrap();
            assert!(w == 1 || w == 2);
            assert_eq!(bfs_distance(&g, 0, w), Some(1));
        }
    }

    #[test]
    fn one_hop_is_uniform_neighbor() {
        let g = plain(4, &[(0, 1), (0, 2), (0, 3)]);
        let mut rng = stream(2, Stream::Sampler);
        let mut counts = [0usize; 4];
        for _ in 0..3000 {
            counts[nhop_sample(&g, 0, 1, &mut rng).unwrap().unwrap()] += 1;
        }
        assert_eq!(counts[0], 0);
        for &c in &counts[1..] {
            assert!(
                (c as f64 - 1000.0).abs() < 3.0 * (3000.0f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt()
            );
        }
    }

    #[test]
    fn dead_ends_reject() {
        let g = plain(3, &[(0, 1)]);
        let mut rng = stream(3, Stream::Sampler);
        assert_eq!(nhop_sample(&g, 2, 1, &mut rng).unwrap(), None);
        assert_eq!(nhop_sample(&g, 0, 2, &mut rng).unwrap(), None);
        assert!(nhop_sample(&g, 0, 0, &mut rng).is_err());
        assert!(nhop_sample(&g, 9, 1, &mut rng).is_err());
    }

    #[test]
    fn bfs_matches_floyd_warshall() {
        let mut rng = stream(4, Stream::Theory);
        let n = 50;
        let edges: Vec<_> = (0..80)
            .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
            .collect();
        let g = plain(n, &edges);
        let fw = floyd_warshall(&g);
        for v in 0..n {
            assert_eq!(bfs_distances(&g, v), fw[v]);
        }
    }
}
