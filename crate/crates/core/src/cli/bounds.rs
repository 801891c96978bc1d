use std::collections::BTreeMap;

use rand::Rng as _;
use serde::Serialize;
use serde_json::{json, Value};

use super::run::report_json;
use super::{write_text, BoundsArgs, Cli, CliError, RunManifest};
use crate::rng::{substream, Stream};
use crate::theory::random::{random_dist_pair, random_leakage_instance, random_tradeoff_case};
use crate::theory::{
    advantage_bruteforce, check_error_decomposition, check_leakage_bound, check_tradeoff_bound,
    euclidean, tv_distance, w1_discrete, TheoryError, BOUND_TOL,
};

pub const BOUNDS_FILE: &str = "bounds.json";
pub const COUNTEREXAMPLE_FILE: &str = "counterexample.json";

/// Instance `i` of check `c` draws from sub-stream `i * CHECKS.len() + c`.
const CHECKS: [&str; 5] = [
    "tradeoff",
    "leakage",
    "advantage_identity",
    "data_processing",
    "contraction",
];

#[derive(Clone, Debug, Default, Serialize)]
pub struct BoundTally {
    pub checked: usize,
    pub passed: usize,
    pub min_slack: Option<f64>,
}

impl BoundTally {
    fn add(&mut self, slack: f64, holds: bool) {
        self.checked += 1;
        self.passed += usize::from(holds);
        self.min_slack = Some(self.min_slack.map_or(slack, |m| m.min(slack)));
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub check: String,
    pub index: u64,
    pub seed: u64,
    pub instance: Value,
    pub record: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsSummary {
    pub count: usize,
    pub seed: u64,
    pub checks: BTreeMap<String, BoundTally>,
    /// First failure in check order; `check`, `index` and `seed` regenerate it.
    pub counterexample: Option<Counterexample>,
}

fn to<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn theory(e: TheoryError) -> CliError {
    CliError::Contract(e.to_string())
}

/// `(slack, holds, instance, record)` for instance `i` of check `c`.
fn run_check(c: usize, seed: u64, i: u64) -> Result<(f64, bool, Value, Value), CliError> {
    let mut rng = substream(seed, Stream::Theory, i * CHECKS.len() as u64 + c as u64);
    Ok(match CHECKS[c] {
        "tradeoff" => {
            let (inst, h) = random_tradeoff_case(&mut rng, 12).map_err(theory)?;
            let rec = check_tradeoff_bound(&inst, &h).map_err(theory)?;
            (
                rec.slack,
                rec.holds,
                json!({ "instance": to(&inst), "h": h }),
                to(&rec),
            )
        }
        "leakage" => {
            let inst = random_leakage_instance(&mut rng, 12).map_err(theory)?;
            let rec = check_leakage_bound(&inst).map_err(theory)?;
            (rec.slack, rec.holds, to(&inst), to(&rec))
        }
        "advantage_identity" => {
            let (p, q) = random_dist_pair(&mut rng, 12, 1).map_err(theory)?;
            let adv = advantage_bruteforce(&p, &q).map_err(theory)?;
            let tv = tv_distance(&p, &q).map_err(theory)?;
            let decomposes = check_error_decomposition(&p, &q).map_err(theory)?;
            let slack = -(adv - tv).abs();
            let holds = slack >= -1e-12 && decomposes;
            (
                slack,
                holds,
                json!({ "p": to(&p), "q": to(&q) }),
                json!({ "advantage": adv, "tv": tv, "decomposes": decomposes }),
            )
        }
        "data_processing" => {
            let (p, q) = random_dist_pair(&mut rng, 12, 1).map_err(theory)?;
            let buckets = rng.random_range(1..=p.len());
            let map: Vec<usize> = (0..p.len()).map(|_| rng.random_range(0..buckets)).collect();
            let index = |x: &[f64]| {
                let k = p
                    .support()
                    .iter()
                    .position(|s| s.as_slice() == x)
                    .expect("support point");
                vec![map[k] as f64]
            };
            let before = tv_distance(&p, &q).map_err(theory)?;
            let after = tv_distance(
                &p.pushforward(index).map_err(theory)?,
                &q.pushforward(index).map_err(theory)?,
            )
            .map_err(theory)?;
            let slack = before - after;
            (
                slack,
                slack >= -1e-12,
                json!({ "p": to(&p), "q": to(&q), "map": map }),
                json!({ "tv": before, "tv_mapped": after }),
            )
        }
        _ => {
            let (p, q) = random_dist_pair(&mut rng, 10, 1).map_err(theory)?;
            let c: f64 = rng.random_range(0.0..3.0);
            let (a, b): (f64, f64) = (rng.random_range(0.1..2.0), rng.random_range(-1.0..1.0));
            let f = move |x: &[f64]| vec![c * (a * x[0] + b).sin() / a];
            let before = w1_discrete(&p, &q, euclidean).map_err(theory)?;
            let after = w1_discrete(
                &p.pushforward(f).map_err(theory)?,
                &q.pushforward(f).map_err(theory)?,
                euclidean,
            )
            .map_err(theory)?;
            let slack = c * before - after;
            (
                slack,
                slack >= -BOUND_TOL,
                json!({ "p": to(&p), "q": to(&q), "lipschitz": c, "a": a, "b": b }),
                json!({ "w1": before, "w1_mapped": after }),
            )
        }
    })
}

pub fn check_bounds(count: usize, seed: u64) -> Result<BoundsSummary, CliError> {
    if count == 0 {
        return Err(CliError::Contract("count must be >= 1".into()));
    }
    let mut checks: BTreeMap<String, BoundTally> = CHECKS
        .iter()
        .map(|c| (c.to_string(), BoundTally::default()))
        .collect();
    let mut counterexample = None;
    for (c, name) in CHECKS.iter().enumerate() {
        for i in 0..count as u64 {
            let (slack, holds, instance, record) = run_check(c, seed, i)?;
            checks
                .get_mut(*name)
                .expect("known check")
                .add(slack, holds);
            if !holds && counterexample.is_none() {
                counterexample = Some(Counterexample {
                    check: name.to_string(),
                    index: i,
                    seed,
                    instance,
                    record,
                });
            }
        }
    }
    Ok(BoundsSummary {
        count,
        seed,
        checks,
        counterexample,
    })
}

pub fn verify_bounds(cli: &Cli, args: &BoundsArgs) -> Result<(), CliError> {
    let seed = cli.seed.unwrap_or(0);
    let summary = check_bounds(args.count, seed)?;
    let value = serde_json::to_value(&summary).expect("summary serializes");
    write_text(&cli.out, BOUNDS_FILE, &report_json(&value))?;
    let mut m = RunManifest::new(
        "verify-bounds",
        format!("count = {}\n", args.count),
        vec![seed],
    );
    m.output(&cli.out, BOUNDS_FILE)?;
    if let Some(ce) = &summary.counterexample {
        write_text(
            &cli.out,
            COUNTEREXAMPLE_FILE,
            &report_json(&serde_json::to_value(ce).expect("serializes")),
        )?;
        m.output(&cli.out, COUNTEREXAMPLE_FILE)?;
    }
    m.write(&cli.out)?;
    match summary.counterexample {
        Some(ce) => Err(CliError::Counterexample(format!(
            "{} bound violated on instance {} (seed {})",
            ce.check, ce.index, ce.seed
        ))),
        None => Ok(()),
    }
}
