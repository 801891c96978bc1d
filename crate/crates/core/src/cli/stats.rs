use std::fmt::Write as _;

use rand::Rng as _;

use super::run::record_graph_inputs;
use super::{write_text, Cli, CliError, NhopArgs, RunManifest};
use crate::graph::{bfs_distance, load_graph_dir, nhop_sample, Graph};
use crate::rng::{substream, Stream};

pub const NHOP_FILE: &str = "nhop_stats.csv";

#[derive(Clone, Debug, PartialEq)]
pub struct HopStats {
    pub hop: usize,
    pub trials: usize,
    pub accepted: usize,
    /// Accepted samples at BFS distance exactly `hop`.
    pub exact: usize,
    pub distance_sum: usize,
}

impl HopStats {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.trials as f64
    }

    /// `None` when nothing was accepted.
    pub fn exact_rate(&self) -> Option<f64> {
        (self.accepted > 0).then(|| self.exact as f64 / self.accepted as f64)
    }

    pub fn mean_distance(&self) -> Option<f64> {
        (self.accepted > 0).then(|| self.distance_sum as f64 / self.accepted as f64)
    }
}

/// `trials` samples from uniformly drawn start nodes; one RNG sub-stream per hop count.
pub fn hop_stats(g: &Graph, hop: usize, trials: usize, seed: u64) -> Result<HopStats, CliError> {
    if trials == 0 {
        return Err(CliError::Contract("trials must be >= 1".into()));
    }
    if hop == 0 {
        return Err(CliError::Contract("hop counts must be >= 1".into()));
    }
    let mut rng = substream(seed, Stream::Sampler, hop as u64);
    let mut s = HopStats {
        hop,
        trials,
        accepted: 0,
        exact: 0,
        distance_sum: 0,
    };
    for _ in 0..trials {
        let v = rng.random_range(0..g.node_count());
        if let Some(w) = nhop_sample(g, v, hop, &mut rng)? {
            let d = bfs_distance(g, v, w).expect("sampled endpoints are connected");
            s.accepted += 1;
            s.distance_sum += d;
            if d == hop {
                s.exact += 1;
            }
        }
    }
    Ok(s)
}

pub fn nhop_csv(rows: &[HopStats]) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:?}"));
    let mut s = String::from("hop,trials,accepted,acceptance_rate,exact_rate,mean_distance\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{:?},{},{}",
            r.hop,
            r.trials,
            r.accepted,
            r.acceptance_rate(),
            opt(r.exact_rate()),
            opt(r.mean_distance())
        );
    }
    s
}

pub fn nhop_stats(cli: &Cli, args: &NhopArgs) -> Result<(), CliError> {
    let seed = cli.seed.unwrap_or(0);
    let g = load_graph_dir(&args.graph)?;
    let rows = args
        .hops
        .iter()
        .map(|&n| hop_stats(&g, n, args.trials, seed))
        .collect::<Result<Vec<_>, _>>()?;
    write_text(&cli.out, NHOP_FILE, &nhop_csv(&rows))?;
    let hops: Vec<String> = args.hops.iter().map(usize::to_string).collect();
    let mut m = RunManifest::new(
        "nhop-stats",
        format!("hops = {}\ntrials = {}\n", hops.join(","), args.trials),
        vec![seed],
    );
    record_graph_inputs(&mut m, &args.graph)?;
    m.output(&cli.out, NHOP_FILE)?;
    m.write(&cli.out)?;
    Ok(())
}
