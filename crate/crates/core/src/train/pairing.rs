use super::{AttackMode, TrainError};
use crate::graph::{nhop_sample, Graph};
use crate::rng::Rng;

/// Pairs `(v, w)`: the attacker sees `z_v` and must predict `A_w`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Pairing {
    pub pairs: Vec<(usize, usize)>,
}

impl Pairing {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn sources(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn targets(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.1).collect()
    }

    /// Keeps only pairs whose label node passes `keep`.
    pub fn retain_targets(&mut self, keep: impl Fn(usize) -> bool) {
        self.pairs.retain(|&(_, w)| keep(w));
    }
}

/// Pairing over every node of `g`.
pub fn pair_nodes(g: &Graph, mode: AttackMode, rng: &mut Rng) -> Result<Pairing, TrainError> {
    let all: Vec<usize> = (0..g.node_count()).collect();
    pair_subset(g, &all, mode, rng)
}

/// Pairing over `nodes`, in order. Sampler rejections drop the node.
pub fn pair_subset(
    g: &Graph,
    nodes: &[usize],
    mode: AttackMode,
    rng: &mut Rng,
) -> Result<Pairing, TrainError> {
    let hops = match mode {
        AttackMode::Node => {
            return Ok(Pairing {
                pairs: nodes.iter().map(|&v| (v, v)).collect(),
            })
        }
        AttackMode::Neighborhood => 1,
        AttackMode::NHop(k) => k,
    };
    let mut pairs = Vec::with_capacity(nodes.len());
    for &v in nodes {
        if let Some(w) = nhop_sample(g, v, hops, rng)? {
            pairs.push((v, w));
        }
    }
    Ok(Pairing { pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::path;
    use crate::rng::{stream, Stream};

    #[test]
    fn node_mode_is_identity() {
        let g = path(5);
        let p = pair_nodes(&g, AttackMode::Node, &mut stream(0, Stream::Sampler)).unwrap();
        assert_eq!(p.pairs, (0..5).map(|v| (v, v)).collect::<Vec<_>>());
    }

    #[test]
    fn neighborhood_pairs_are_edges() {
        let g = path(2);
        let mut rng = stream(1, Stream::Sampler);
        for _ in 0..20 {
            let p = pair_nodes(&g, AttackMode::Neighborhood, &mut rng).unwrap();
            assert_eq!(p.pairs, vec![(0, 1), (1, 0)]);
        }
    }

    #[test]
    fn two_hops_from_path_end() {
        let g = path(4);
        let mut rng = stream(2, Stream::Sampler);
        for _ in 0..20 {
            let p = pair_subset(&g, &[0], AttackMode::NHop(2), &mut rng).unwrap();
            assert_eq!(p.pairs, vec![(0, 2)]);
        }
    }

    #[test]
    fn rejections_shrink_the_pairing() {
        let g = path(2);
        let p = pair_nodes(&g, AttackMode::NHop(2), &mut stream(3, Stream::Sampler)).unwrap();
        assert!(p.is_empty());
    }
}
