use std::fmt::Write as _;

use rayon::prelude::*;

use super::run::{
    config_text, load_probe_section, load_sbm_config, load_training_config, record_graph_inputs,
};
use super::{read_text, write_text, Cli, CliError, RunManifest, SweepArgs};
use crate::eval::{evaluate, ProbeConfig};
use crate::graph::{generate_sbm, load_graph_dir, Graph, SbmConfig};
use crate::train::{train, TaskSplit, TrainingConfig};

pub const SWEEP_FILE: &str = "sweep.csv";
pub const FAILURES_FILE: &str = "sweep_failures.csv";

enum GraphSource {
    Fixed(Graph),
    /// Regenerated per point with the point's seed.
    Sampled(SbmConfig),
}

/// One sweep row; metrics are `None` when the run failed.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub lambda: f64,
    pub seed: u64,
    pub task_metric: Option<f64>,
    pub adv_f1: Option<f64>,
    pub adv_auc: Option<f64>,
    pub error: Option<String>,
}

fn cell(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:?}"))
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from("lambda,seed,task_metric,adv_f1,adv_auc\n");
    for p in points {
        let _ = writeln!(
            s,
            "{:?},{},{},{},{}",
            p.lambda,
            p.seed,
            cell(p.task_metric),
            cell(p.adv_f1),
            cell(p.adv_auc)
        );
    }
    s
}

fn run_point(
    graph: &GraphSource,
    base: &TrainingConfig,
    probes: Option<&[ProbeConfig]>,
    lambda: f64,
    seed: u64,
) -> Result<(Option<f64>, Option<f64>, Option<f64>), CliError> {
    let g = match graph {
        GraphSource::Fixed(g) => g.clone(),
        GraphSource::Sampled(sbm) => generate_sbm(&SbmConfig {
            seed,
            ..sbm.clone()
        })?,
    };
    let cfg = TrainingConfig {
        lambda,
        seed,
        ..base.clone()
    };
    cfg.validate()?;
    let split = TaskSplit::prepare(&g, &cfg)?;
    let outcome = train(&g, &split, &cfg)?;
    let default_probe = [ProbeConfig {
        attack_mode: cfg.attack_mode,
        seed,
        ..ProbeConfig::default()
    }];
    let report = evaluate(
        &g,
        &split,
        &cfg,
        &outcome.params,
        probes.unwrap_or(&default_probe),
    )?;
    let first = report.attacks.first();
    Ok((
        report.task_value,
        first.map(|a| a.macro_f1),
        first.and_then(|a| a.auc),
    ))
}

pub fn sweep(cli: &Cli, args: &SweepArgs) -> Result<(), CliError> {
    if args.lambdas.is_empty() {
        return Err(CliError::Contract("sweep needs at least one lambda".into()));
    }
    let seeds = if args.seeds.is_empty() {
        vec![cli.seed.unwrap_or(0)]
    } else {
        args.seeds.clone()
    };
    let train_text = config_text(cli)?;
    let base = load_training_config(&train_text, None)?;
    let probes = match &args.probe_config {
        Some(p) => Some(load_probe_section(&read_text(p)?, None)?.configs()?),
        None => None,
    };
    let mut m = RunManifest::new("sweep", train_text.clone(), seeds.clone());
    let source = match (&args.graph, &args.sbm) {
        (Some(dir), _) => {
            record_graph_inputs(&mut m, dir)?;
            GraphSource::Fixed(load_graph_dir(dir)?)
        }
        (None, Some(path)) => {
            m.input(path)?;
            GraphSource::Sampled(load_sbm_config(&read_text(path)?, None)?)
        }
        (None, None) => return Err(CliError::Contract("sweep needs --graph or --sbm".into())),
    };
    if let Some(p) = &cli.config {
        m.input(p)?;
    }
    if let Some(p) = &args.probe_config {
        m.input(p)?;
    }

    let mut grid: Vec<(f64, u64)> = args
        .lambdas
        .iter()
        .flat_map(|&l| seeds.iter().map(move |&s| (l, s)))
        .collect();
    grid.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let points: Vec<SweepPoint> = grid
        .par_iter()
        .map(
            |&(lambda, seed)| match run_point(&source, &base, probes.as_deref(), lambda, seed) {
                Ok((task_metric, adv_f1, adv_auc)) => SweepPoint {
                    lambda,
                    seed,
                    task_metric,
                    adv_f1,
                    adv_auc,
                    error: None,
                },
                Err(e) => SweepPoint {
                    lambda,
                    seed,
                    task_metric: None,
                    adv_f1: None,
                    adv_auc: None,
                    error: Some(e.to_string()),
                },
            },
        )
        .collect();

    write_text(&cli.out, SWEEP_FILE, &sweep_csv(&points))?;
    m.output(&cli.out, SWEEP_FILE)?;
    let failed: Vec<&SweepPoint> = points.iter().filter(|p| p.error.is_some()).collect();
    if !failed.is_empty() {
        let mut s = String::from("lambda,seed,error\n");
        for p in &failed {
            let msg = p
                .error
                .as_deref()
                .unwrap_or_default()
                .replace(['\n', ','], " ");
            let _ = writeln!(s, "{:?},{},{msg}", p.lambda, p.seed);
        }
        write_text(&cli.out, FAILURES_FILE, &s)?;
        m.output(&cli.out, FAILURES_FILE)?;
        for p in failed {
            eprintln!(
                "warning: lambda {} seed {} failed: {}",
                p.lambda,
                p.seed,
                p.error.as_deref().unwrap_or_default()
            );
        }
    }
    m.write(&cli.out)?;
    Ok(())
}
