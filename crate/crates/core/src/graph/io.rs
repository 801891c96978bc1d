use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Attribute, Graph, GraphError, NodeTargets};
use crate::autodiff::Tensor;

pub const NODE_FILE: &str = "nodes.csv";
pub const EDGE_FILE: &str = "edges.csv";

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> GraphError {
    GraphError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>, GraphError> {
    let file = fs::File::open(path).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_err(path: &Path, e: csv::Error) -> GraphError {
    let line = e.position().map_or(0, |p| p.line());
    parse_err(path, line, e.to_string())
}

enum Column {
    Feature,
    Sensitive(String),
    Target,
}

/// Reads `nodes.csv` and `edges.csv` from a directory.
pub fn load_graph_dir(dir: &Path) -> Result<Graph, GraphError> {
    load_graph(&dir.join(NODE_FILE), &dir.join(EDGE_FILE))
}

/// Loads a node table (`node_id,f0,...,f{d-1},sensitive[,target]`) and an
/// edge list (`src,dst[,target]`). Edges are symmetrized and de-duplicated.
pub fn load_graph(node_path: &Path, edge_path: &Path) -> Result<Graph, GraphError> {
    let mut rdr = reader(node_path)?;
    let headers = rdr.headers().map_err(|e| csv_err(node_path, e))?.clone();
    if headers.get(0) != Some("node_id") {
        return Err(parse_err(node_path, 1, "first column must be node_id"));
    }
    let mut columns = Vec::new();
    let mut feature_count = 0;
    for h in headers.iter().skip(1) {
        let col = if let Some(rest) = h.strip_prefix('f').filter(|r| r.parse::<usize>().is_ok()) {
            if rest.parse::<usize>().unwrap() != feature_count {
                return Err(parse_err(
                    node_path,
                    1,
                    format!("feature column {h} out of order"),
                ));
            }
            feature_count += 1;
            Column::Feature
        } else if h == "sensitive" || h.starts_with("sensitive_") {
            Column::Sensitive(h.to_string())
        } else if h == "target" {
            Column::Target
        } else {
            return Err(parse_err(node_path, 1, format!("unknown column {h}")));
        };
        columns.push(col);
    }
    if feature_count == 0 {
        return Err(parse_err(
            node_path,
            1,
            "missing feature columns f0..f{d-1}",
        ));
    }
    let sensitive_names: Vec<String> = columns
        .iter()
        .filter_map(|c| match c {
            Column::Sensitive(n) => Some(n.clone()),
            _ => None,
        })
        .collect();
    if sensitive_names.is_empty() {
        return Err(parse_err(node_path, 1, "missing sensitive column"));
    }
    let has_target = columns.iter().any(|c| matches!(c, Column::Target));

    struct Row {
        line: u64,
        features: Vec<f64>,
        sensitive: Vec<usize>,
        target: Option<String>,
    }
    let mut rows: Vec<(usize, Row)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(node_path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let id_field = rec.get(0).unwrap_or("");
        let id: usize = id_field
            .parse()
            .map_err(|_| parse_err(node_path, line, format!("non-integer node id {id_field:?}")))?;
        let mut row = Row {
            line,
            features: Vec::with_capacity(feature_count),
            sensitive: Vec::new(),
            target: None,
        };
        for (col, field) in columns.iter().zip(rec.iter().skip(1)) {
            match col {
                Column::Feature => row.features.push(field.parse().map_err(|_| {
                    parse_err(node_path, line, format!("bad feature value {field:?}"))
                })?),
                Column::Sensitive(_) => row.sensitive.push(field.parse().map_err(|_| {
                    parse_err(node_path, line, format!("bad sensitive label {field:?}"))
                })?),
                Column::Target => row.target = Some(field.to_string()),
            }
        }
        rows.push((id, row));
    }
    let n = rows.len();
    if n == 0 {
        return Err(parse_err(node_path, 1, "node table has no rows"));
    }
    let mut ordered: Vec<Option<Row>> = (0..n).map(|_| None).collect();
    for (id, row) in rows {
        if id >= n {
            return Err(parse_err(
                node_path,
                row.line,
                format!("node id {id} out of range 0..{n}"),
            ));
        }
        if ordered[id].is_some() {
            return Err(parse_err(
                node_path,
                row.line,
                format!("duplicate node id {id}"),
            ));
        }
        ordered[id] = Some(row);
    }
    let ordered: Vec<Row> = ordered.into_iter().map(Option::unwrap).collect();

    let features = Tensor::matrix(
        n,
        feature_count,
        ordered.iter().flat_map(|r| r.features.clone()).collect(),
    );
    let mut sensitive = Vec::new();
    for (k, name) in sensitive_names.iter().enumerate() {
        let labels: Vec<usize> = ordered.iter().map(|r| r.sensitive[k]).collect();
        let classes = labels.iter().max().map_or(2, |m| (m + 1).max(2));
        sensitive.push(Attribute::new(name.clone(), labels, classes)?);
    }
    let node_targets = if has_target {
        let raw: Vec<(u64, String)> = ordered
            .iter()
            .map(|r| (r.line, r.target.clone().unwrap_or_default()))
            .collect();
        if raw.iter().all(|(_, s)| s.parse::<usize>().is_ok()) {
            let labels: Vec<usize> = raw.iter().map(|(_, s)| s.parse().unwrap()).collect();
            let classes = labels.iter().max().map_or(2, |m| (m + 1).max(2));
            Some(NodeTargets::Categorical { labels, classes })
        } else {
            let mut vals = Vec::with_capacity(n);
            for (line, s) in &raw {
                vals.push(
                    s.parse::<f64>()
                        .map_err(|_| parse_err(node_path, *line, format!("bad target {s:?}")))?,
                );
            }
            Some(NodeTargets::Real(vals))
        }
    } else {
        None
    };

    let mut erdr = reader(edge_path)?;
    let eh = erdr.headers().map_err(|e| csv_err(edge_path, e))?.clone();
    let edge_has_target = match eh.iter().collect::<Vec<_>>().as_slice() {
        ["src", "dst"] => false,
        ["src", "dst", "target"] => true,
        _ => {
            return Err(parse_err(
                edge_path,
                1,
                "edge header must be src,dst[,target]",
            ))
        }
    };
    let mut edges = Vec::new();
    let mut targets = Vec::new();
    for rec in erdr.records() {
        let rec = rec.map_err(|e| csv_err(edge_path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let id = |i: usize| -> Result<usize, GraphError> {
            let f = rec.get(i).unwrap_or("");
            let v: usize = f
                .parse()
                .map_err(|_| parse_err(edge_path, line, format!("non-integer node id {f:?}")))?;
            if v >= n {
                return Err(parse_err(
                    edge_path,
                    line,
                    format!("node id {v} out of range 0..{n}"),
                ));
            }
            Ok(v)
        };
        let (u, v) = (id(0)?, id(1)?);
        edges.push((u, v));
        if edge_has_target {
            let f = rec.get(2).unwrap_or("");
            targets.push(
                f.parse::<f64>()
                    .map_err(|_| parse_err(edge_path, line, format!("bad edge target {f:?}")))?,
            );
        }
    }
    Graph::new(
        features,
        &edges,
        edge_has_target.then_some(targets),
        sensitive,
        node_targets,
    )
}

/// Writes `nodes.csv` and `edges.csv` into `dir`.
pub fn write_graph(g: &Graph, dir: &Path) -> Result<(), GraphError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| GraphError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let mut out = String::from("node_id");
    for j in 0..g.feature_dim() {
        write!(out, ",f{j}").unwrap();
    }
    for a in g.sensitive() {
        write!(out, ",{}", a.name).unwrap();
    }
    if g.node_targets().is_some() {
        out.push_str(",target");
    }
    out.push('\n');
    for v in 0..g.node_count() {
        write!(out, "{v}").unwrap();
        for x in g.features().row(v) {
            write!(out, ",{x:?}").unwrap();
        }
        for a in g.sensitive() {
            write!(out, ",{}", a.labels[v]).unwrap();
        }
        match g.node_targets() {
            Some(NodeTargets::Categorical { labels, .. }) => write!(out, ",{}", labels[v]).unwrap(),
            Some(NodeTargets::Real(vals)) => write!(out, ",{:?}", vals[v]).unwrap(),
            None => {}
        }
        out.push('\n');
    }
    let node_path = dir.join(NODE_FILE);
    fs::write(&node_path, out).map_err(io_err(&node_path))?;

    let mut out = String::from(if g.edge_targets().is_some() {
        "src,dst,target\n"
    } else {
        "src,dst\n"
    });
    for (i, &(u, v)) in g.edges().iter().enumerate() {
        match g.edge_targets() {
            Some(t) => writeln!(out, "{u},{v},{:?}", t[i]).unwrap(),
            None => writeln!(out, "{u},{v}").unwrap(),
        }
    }
    let edge_path = dir.join(EDGE_FILE);
    fs::write(&edge_path, out).map_err(io_err(&edge_path))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_pair(
        nodes: &str,
        edges: &str,
    ) -> (tempfile::TempDir, std::path::PathBuf, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let np = dir.path().join("n.csv");
        let ep = dir.path().join("e.csv");
        fs::write(&np, nodes).unwrap();
        fs::write(&ep, edges).unwrap();
        (dir, np, ep)
    }

    #[test]
    fn smallest_graph() {
        let (_d, np, ep) = write_pair("node_id,f0,sensitive\n0,1.0,0\n1,0.5,1\n", "src,dst\n0,1\n");
        let g = load_graph(&np, &ep).unwrap();
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0]);
    }

    #[test]
    fn both_orientations_collapse() {
        let (_d, np, ep) = write_pair(
            "node_id,f0,sensitive\n0,1.0,0\n1,0.5,1\n",
            "src,dst\n0,1\n1,0\n",
        );
        let g = load_graph(&np, &ep).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn star_degree_sequence() {
        let nodes = "node_id,f0,sensitive\n0,0,0\n1,0,1\n2,0,0\n3,0,1\n4,0,0\n";
        let (_d, np, ep) = write_pair(nodes, "src,dst\n0,1\n0,2\n3,0\n0,4\n");
        let g = load_graph(&np, &ep).unwrap();
        let degrees: Vec<_> = (0..5).map(|v| g.degree(v)).collect();
        assert_eq!(degrees, vec![4, 1, 1, 1, 1]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let (_d, np, ep) = write_pair("node_id,f0,sensitive\n0,1.0,0\nx,0.5,1\n", "src,dst\n0,1\n");
        match load_graph(&np, &ep) {
            Err(GraphError::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("non-integer"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let (_d, np, ep) = write_pair(
            "node_id,f0,sensitive\n0,1.0,0\n1,0.5,1\n",
            "src,dst\n0,1\n1,7\n",
        );
        match load_graph(&np, &ep) {
            Err(GraphError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let (_d, np, ep) = write_pair("node_id,f0\n0,1.0\n", "src,dst\n");
        assert!(matches!(
            load_graph(&np, &ep),
            Err(GraphError::Parse { .. })
        ));
    }

    #[test]
    fn targets_round_trip() {
        let nodes = "node_id,f0,f1,sensitive,sensitive_age,target\n0,1.5,0,0,2,1\n1,0,-2,1,0,0\n";
        let (d, np, ep) = write_pair(nodes, "src,dst,target\n0,1,4.5\n");
        let g = load_graph(&np, &ep).unwrap();
        assert_eq!(g.sensitive().len(), 2);
        assert_eq!(g.sensitive()[1].classes, 3);
        assert_eq!(g.edge_targets(), Some(&[4.5][..]));
        write_graph(&g, &d.path().join("out")).unwrap();
        let back = load_graph_dir(&d.path().join("out")).unwrap();
        assert_eq!(back, g);
    }
}
