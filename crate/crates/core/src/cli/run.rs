use std::path::Path;

use serde_json::Value;

use super::{read_text, write_text, Cli, CliError, ProbeArgs, RunManifest, TrainArgs};
use crate::config::{apply, KeyValueSection};
use crate::eval::{evaluate, ProbeConfig};
use crate::graph::{
    generate_sbm, load_graph_dir, write_graph, Graph, SbmConfig, EDGE_FILE, NODE_FILE,
};
use crate::models::encode_values;
use crate::train::{
    checkpoint_csv, parse_checkpoint, train as run_training, TaskSplit, TrainError, TrainingConfig,
};

pub const CHECKPOINT_FILE: &str = "checkpoint.csv";
pub const HISTORY_FILE: &str = "history.csv";
pub const EMBEDDINGS_FILE: &str = "embeddings.csv";
pub const CONFIG_FILE: &str = "config.txt";
pub const REPORT_FILE: &str = "report.json";

/// Config file text, or the empty config when none is given.
pub(super) fn config_text(cli: &Cli) -> Result<String, CliError> {
    cli.config.as_deref().map_or(Ok(String::new()), read_text)
}

pub(super) fn parse_into(
    text: &str,
    sections: &mut [&mut dyn KeyValueSection],
) -> Result<(), CliError> {
    apply(text, sections).map_err(|e| CliError::Contract(format!("config: {e}")))
}

pub(super) fn load_training_config(
    text: &str,
    seed: Option<u64>,
) -> Result<TrainingConfig, CliError> {
    let mut cfg = TrainingConfig::default();
    parse_into(text, &mut [&mut cfg])?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub(super) fn load_sbm_config(text: &str, seed: Option<u64>) -> Result<SbmConfig, CliError> {
    let mut cfg = SbmConfig::default();
    parse_into(text, &mut [&mut cfg])?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub(super) fn record_graph_inputs(m: &mut RunManifest, dir: &Path) -> Result<(), CliError> {
    m.input(&dir.join(NODE_FILE))?;
    m.input(&dir.join(EDGE_FILE))
}

fn sbm_text(cfg: &SbmConfig) -> String {
    format!(
        "block_count = {}\nnodes_per_block = {}\np_in = {:?}\np_out = {:?}\nrho = {:?}\nfeature_noise = {:?}\n\
         edge_targets = {}\nrating_noise = {:?}\nseed = {}\n",
        cfg.block_count,
        cfg.nodes_per_block,
        cfg.p_in,
        cfg.p_out,
        cfg.rho,
        cfg.feature_noise,
        cfg.edge_targets,
        cfg.rating_noise,
        cfg.seed
    )
}

pub fn generate(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_sbm_config(&config_text(cli)?, cli.seed)?;
    let g = generate_sbm(&cfg)?;
    write_graph(&g, &cli.out)?;
    let mut m = RunManifest::new("generate", sbm_text(&cfg), vec![cfg.seed]);
    if let Some(p) = &cli.config {
        m.input(p)?;
    }
    m.output(&cli.out, NODE_FILE)?;
    m.output(&cli.out, EDGE_FILE)?;
    m.write(&cli.out)?;
    Ok(())
}

fn load_graph(dir: &Path) -> Result<Graph, CliError> {
    Ok(load_graph_dir(dir)?)
}

pub fn train(cli: &Cli, args: &TrainArgs) -> Result<(), CliError> {
    let cfg = load_training_config(&config_text(cli)?, cli.seed)?;
    let g = load_graph(&args.graph)?;
    let split = TaskSplit::prepare(&g, &cfg)?;
    let mut m = RunManifest::new("train", cfg.to_text(), vec![cfg.seed]);
    record_graph_inputs(&mut m, &args.graph)?;
    if let Some(p) = &cli.config {
        m.input(p)?;
    }
    write_text(&cli.out, CONFIG_FILE, &cfg.to_text())?;
    m.output(&cli.out, CONFIG_FILE)?;
    match run_training(&g, &split, &cfg) {
        Ok(outcome) => {
            write_text(&cli.out, CHECKPOINT_FILE, &checkpoint_csv(&outcome.params))?;
            write_text(&cli.out, HISTORY_FILE, &outcome.history.to_csv())?;
            let z = encode_values(&g, &outcome.params, &cfg.encoder).map_err(TrainError::from)?;
            write_text(&cli.out, EMBEDDINGS_FILE, &z.to_csv())?;
            for name in [CHECKPOINT_FILE, HISTORY_FILE, EMBEDDINGS_FILE] {
                m.output(&cli.out, name)?;
            }
            m.write(&cli.out)?;
            Ok(())
        }
        Err(TrainError::Aborted {
            iteration,
            message,
            last_good,
            history,
        }) => {
            write_text(&cli.out, CHECKPOINT_FILE, &checkpoint_csv(&last_good))?;
            write_text(&cli.out, HISTORY_FILE, &history.to_csv())?;
            m.output(&cli.out, CHECKPOINT_FILE)?;
            m.output(&cli.out, HISTORY_FILE)?;
            m.write(&cli.out)?;
            Err(CliError::Numeric(format!(
                "training aborted at iteration {iteration}: {message}; last good checkpoint written"
            )))
        }
        Err(e) => Err(e.into()),
    }
}

/// Probe settings plus `probe_modes`, a comma list of attack modes that
/// overrides `probe_mode`.
#[derive(Default)]
pub(super) struct ProbeSection {
    pub base: ProbeConfig,
    pub modes: Vec<String>,
}

impl KeyValueSection for ProbeSection {
    fn set(&mut self, key: &str, value: &str) -> Result<bool, String> {
        if key == "probe_modes" {
            self.modes = value
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            return Ok(true);
        }
        self.base.set(key, value)
    }
}

impl ProbeSection {
    pub fn configs(&self) -> Result<Vec<ProbeConfig>, CliError> {
        if self.modes.is_empty() {
            return Ok(vec![self.base.clone()]);
        }
        self.modes
            .iter()
            .map(|m| {
                let attack_mode = m.parse().map_err(CliError::Contract)?;
                Ok(ProbeConfig {
                    attack_mode,
                    ..self.base.clone()
                })
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let b = &self.base;
        let mut s = format!(
            "probe_hidden = {}\nprobe_epochs = {}\nprobe_learning_rate = {:?}\nprobe_seed = {}\nprobe_mode = {}\n",
            b.hidden, b.epochs, b.learning_rate, b.seed, b.attack_mode
        );
        if !self.modes.is_empty() {
            s.push_str(&format!("probe_modes = {}\n", self.modes.join(",")));
        }
        s
    }
}

pub(super) fn load_probe_section(text: &str, seed: Option<u64>) -> Result<ProbeSection, CliError> {
    let mut section = ProbeSection::default();
    parse_into(text, &mut [&mut section])?;
    if let Some(s) = seed {
        section.base.seed = s;
    }
    for c in section.configs()? {
        c.validate()?;
    }
    Ok(section)
}

pub(super) fn report_json(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

pub fn probe(cli: &Cli, args: &ProbeArgs) -> Result<(), CliError> {
    let section = load_probe_section(&config_text(cli)?, cli.seed)?;
    let cfg_path = args.run.join(CONFIG_FILE);
    let ckpt_path = args.run.join(CHECKPOINT_FILE);
    let cfg = TrainingConfig::from_text(&read_text(&cfg_path)?)?;
    let params = parse_checkpoint(&read_text(&ckpt_path)?)?;
    let g = load_graph(&args.graph)?;
    let split = TaskSplit::prepare(&g, &cfg)?;
    let report = evaluate(&g, &split, &cfg, &params, &section.configs()?)?;
    write_text(&cli.out, REPORT_FILE, &report_json(&report.to_json()))?;

    let mut m = RunManifest::new("probe", section.to_text(), vec![section.base.seed]);
    record_graph_inputs(&mut m, &args.graph)?;
    m.input(&cfg_path)?;
    m.input(&ckpt_path)?;
    if let Some(p) = &cli.config {
        m.input(p)?;
    }
    m.output(&cli.out, REPORT_FILE)?;
    m.write(&cli.out)?;
    Ok(())
}
