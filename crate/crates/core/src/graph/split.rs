use rand::seq::SliceRandom;

use super::{Graph, GraphError};
use crate::rng::{stream, Stream};

/// Disjoint train/test partition of a graph's edges, as indices into [`Graph::edges`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl EdgeSplit {
    pub fn train_edges<'g>(&self, g: &'g Graph) -> Vec<(usize, usize)> {
        self.train.iter().map(|&i| g.edges()[i]).collect()
    }

    pub fn test_edges<'g>(&self, g: &'g Graph) -> Vec<(usize, usize)> {
        self.test.iter().map(|&i| g.edges()[i]).collect()
    }
}

/// Disjoint train/test partition of node ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl NodeSplit {
    /// Membership mask for the training side.
    pub fn train_mask(&self, node_count: usize) -> Vec<bool> {
        let mut mask = vec![false; node_count];
        for &v in &self.train {
            mask[v] = true;
        }
        mask
    }
}

fn check_fraction(f: f64) -> Result<(), GraphError> {
    if f > 0.0 && f < 1.0 {
        Ok(())
    } else {
        Err(GraphError::Contract(format!(
            "test fraction must lie in (0,1), got {f}"
        )))
    }
}

fn shuffled_partition(n: usize, test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut stream(seed, Stream::Split));
    let test_len = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut test = ids.split_off(n - test_len);
    let mut train = ids;
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Uniformly random split with `round(test_fraction * |E|)` test edges
/// (clamped so both sides are non-empty).
pub fn split_edges(g: &Graph, test_fraction: f64, seed: u64) -> Result<EdgeSplit, GraphError> {
    check_fraction(test_fraction)?;
    if g.edge_count() < 2 {
        return Err(GraphError::Contract(format!(
            "edge split needs at least 2 edges, graph has {}",
            g.edge_count()
        )));
    }
    let (train, test) = shuffled_partition(g.edge_count(), test_fraction, seed);
    Ok(EdgeSplit { train, test })
}

pub fn split_nodes(
    node_count: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<NodeSplit, GraphError> {
    check_fraction(test_fraction)?;
    if node_count < 2 {
        return Err(GraphError::Contract(
            "node split needs at least 2 nodes".into(),
        ));
    }
    let (train, test) = shuffled_partition(node_count, test_fraction, seed ^ 0x5eed);
    Ok(NodeSplit { train, test })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use rand::Rng;

    use super::*;
    use crate::graph::fixtures::{path, plain};

    #[test]
    fn ten_edges_one_test() {
        let g = path(11);
        let s = split_edges(&g, 0.1, 1).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (9, 1));
        assert_eq!(s, split_edges(&g, 0.1, 1).unwrap());
    }

    #[test]
    fn union_and_disjointness_over_random_trials() {
        let mut rng = crate::rng::stream(5, Stream::Theory);
        for trial in 0..100 {
            let n = rng.random_range(3..30);
            let edges: Vec<_> = (0..n * 2)
                .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
                .collect();
            let g = plain(n, &edges);
            if g.edge_count() < 2 {
                continue;
            }
            let s = split_edges(&g, rng.random_range(0.05..0.95), trial).unwrap();
            let train: BTreeSet<_> = s.train_edges(&g).into_iter().collect();
            let test: BTreeSet<_> = s.test_edges(&g).into_iter().collect();
            assert!(train.is_disjoint(&test));
            let all: BTreeSet<_> = g.edges().iter().copied().collect();
            assert_eq!(train.union(&test).copied().collect::<BTreeSet<_>>(), all);
        }
    }

    #[test]
    fn rejects_tiny_graphs_and_bad_fractions() {
        assert!(split_edges(&path(2), 0.5, 0).is_err());
        assert!(split_edges(&path(5), 1.0, 0).is_err());
        assert!(split_nodes(10, 0.0, 0).is_err());
    }

    #[test]
    fn node_split_partitions() {
        let s = split_nodes(50, 0.3, 2).unwrap();
        assert_eq!(s.test.len(), 15);
        let mut all: Vec<_> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
    }
}
