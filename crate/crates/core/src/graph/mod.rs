//! Graph data model, CSV loaders, synthetic generation, splits and samplers.

mod io;
mod nhop;
mod sbm;
mod split;

pub use io::{load_graph, load_graph_dir, write_graph, EDGE_FILE, NODE_FILE};
pub use nhop::{bfs_distance, bfs_distances, nhop_path, nhop_sample};
pub use sbm::{generate_sbm, SbmConfig};
pub use split::{split_edges, split_nodes, EdgeSplit, NodeSplit};

use std::path::PathBuf;

use thiserror::Error;

use crate::autodiff::Tensor;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Contract(String),
}

/// One categorical sensitive attribute over all nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Attribute {
    pub name: String,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl Attribute {
    pub fn new(
        name: impl Into<String>,
        labels: Vec<usize>,
        classes: usize,
    ) -> Result<Self, GraphError> {
        let name = name.into();
        if classes < 2 {
            return Err(GraphError::Contract(format!(
                "attribute {name} needs at least 2 classes, got {classes}"
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(GraphError::Contract(format!(
                "attribute {name} label {bad} out of range for {classes} classes"
            )));
        }
        Ok(Self {
            name,
            labels,
            classes,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeTargets {
    Categorical { labels: Vec<usize>, classes: usize },
    Real(Vec<f64>),
}

impl NodeTargets {
    pub fn len(&self) -> usize {
        match self {
            NodeTargets::Categorical { labels, .. } => labels.len(),
            NodeTargets::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Immutable undirected graph with node features, sensitive attributes and targets.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    edge_targets: Option<Vec<f64>>,
    features: Tensor,
    sensitive: Vec<Attribute>,
    node_targets: Option<NodeTargets>,
}

impl Graph {
    /// Builds a graph from an undirected edge list. Self-loops are dropped and
    /// duplicate edges (in either orientation) collapse to the first occurrence.
    pub fn new(
        features: Tensor,
        edges: &[(usize, usize)],
        edge_targets: Option<Vec<f64>>,
        sensitive: Vec<Attribute>,
        node_targets: Option<NodeTargets>,
    ) -> Result<Self, GraphError> {
        let n = features.rows();
        if let Some(t) = &edge_targets {
            if t.len() != edges.len() {
                return Err(GraphError::Contract(format!(
                    "{} edge targets for {} edges",
                    t.len(),
                    edges.len()
                )));
            }
        }
        for a in &sensitive {
            if a.labels.len() != n {
                return Err(GraphError::Contract(format!(
                    "attribute {} has {} labels for {n} nodes",
                    a.name,
                    a.labels.len()
                )));
            }
        }
        if let Some(t) = &node_targets {
            if t.len() != n {
                return Err(GraphError::Contract(format!(
                    "{} node targets for {n} nodes",
                    t.len()
                )));
            }
            if let NodeTargets::Categorical { labels, classes } = t {
                if labels.iter().any(|&l| l >= *classes) {
                    return Err(GraphError::Contract(
                        "node target label out of range".into(),
                    ));
                }
            }
        }

        let mut seen = std::collections::HashSet::new();
        let mut canon = Vec::new();
        let mut canon_targets = edge_targets.as_ref().map(|_| Vec::new());
        for (i, &(u, v)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(GraphError::Contract(format!(
                    "edge ({u},{v}) out of range for {n} nodes"
                )));
            }
            if u == v {
                continue;
            }
            let key = (u.min(v), u.max(v));
            if seen.insert(key) {
                canon.push(key);
                if let (Some(out), Some(src)) = (canon_targets.as_mut(), edge_targets.as_ref()) {
                    out.push(src[i]);
                }
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &canon {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            adjacency,
            edges: canon,
            edge_targets: canon_targets,
            features,
            sensitive,
            node_targets,
        })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Canonical edges `(u, v)` with `u < v`, in first-seen order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_targets(&self) -> Option<&[f64]> {
        self.edge_targets.as_deref()
    }

    pub fn features(&self) -> &Tensor {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn sensitive(&self) -> &[Attribute] {
        &self.sensitive
    }

    pub fn node_targets(&self) -> Option<&NodeTargets> {
        self.node_targets.as_ref()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Graph with one-dimensional zero features and a constant binary attribute.
    pub fn plain(n: usize, edges: &[(usize, usize)]) -> Graph {
        let attr = Attribute::new("sensitive", (0..n).map(|i| i % 2).collect(), 2).unwrap();
        Graph::new(Tensor::zeros(n, 1), edges, None, vec![attr], None).unwrap()
    }

    pub fn path(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        plain(n, &edges)
    }
}
