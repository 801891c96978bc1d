use std::fmt::Write as _;

use crate::autodiff::Tensor;
use crate::models::ModelParams;

use super::TrainError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Task,
    Adversary,
}

impl StepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StepKind::Task => "task",
            StepKind::Adversary => "adversary",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub iter: usize,
    pub kind: StepKind,
    pub task_loss: Option<f64>,
    /// Summed over attributes; `None` when the step had nothing to train on.
    pub adv_loss: Option<f64>,
    pub lambda: f64,
    /// Wall time of the step, or 0 when timing is not recorded.
    pub ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<StepRecord>,
    pub warnings: Vec<String>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl TrainHistory {
    pub fn count(&self, kind: StepKind) -> usize {
        self.records.iter().filter(|r| r.kind == kind).count()
    }

    /// `iter,kind,task_loss,adv_loss,lambda,ms`; absent losses are empty fields.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,kind,task_loss,adv_loss,lambda,ms\n");
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.iter,
                r.kind.as_str(),
                opt(r.task_loss),
                opt(r.adv_loss),
                r.lambda,
                r.ms
            );
        }
        s
    }

    /// Mean task loss over the last `k` task steps.
    pub fn final_task_loss(&self, k: usize) -> Option<f64> {
        let losses: Vec<f64> = self
            .records
            .iter()
            .rev()
            .filter_map(|r| r.task_loss)
            .take(k)
            .collect();
        (!losses.is_empty()).then(|| losses.iter().sum::<f64>() / losses.len() as f64)
    }
}

/// One line per tensor: `path,RxC,v0,v1,...` in path order. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn checkpoint_csv(params: &ModelParams) -> String {
    let mut s = String::new();
    for (path, t) in params.iter() {
        let shape: Vec<String> = t.shape().iter().map(usize::to_string).collect();
        let _ = write!(s, "{path},{}", shape.join("x"));
        for v in t.data() {
            let _ = write!(s, ",{v:?}");
        }
        s.push('\n');
    }
    s
}

pub fn parse_checkpoint(text: &str) -> Result<ModelParams, TrainError> {
    let mut params = ModelParams::new();
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let bad = |m: String| TrainError::Contract(format!("checkpoint line {}: {m}", i + 1));
        let mut fields = line.split(',');
        let path = fields.next().unwrap_or_default().to_string();
        if crate::models::ParamGroup::of(&path).is_none() {
            return Err(bad(format!("unknown parameter path `{path}`")));
        }
        let shape: Vec<usize> = fields
            .next()
            .ok_or_else(|| bad("missing shape".into()))?
            .split('x')
            .map(|d| {
                d.parse()
                    .map_err(|_| bad(format!("bad shape dimension `{d}`")))
            })
            .collect::<Result<_, _>>()?;
        let values: Vec<f64> = fields
            .map(|v| v.parse().map_err(|_| bad(format!("bad value `{v}`"))))
            .collect::<Result<_, _>>()?;
        let t = Tensor::new(shape, values).map_err(|e| bad(e.to_string()))?;
        params.insert(path, t);
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_round_trips_exactly() {
        let mut p = ModelParams::new();
        p.insert(
            "encoder/layer0/W",
            Tensor::matrix(2, 2, vec![0.1, -1e-300, 1.0 / 3.0, 5.0]),
        );
        p.insert("task/bilinear/B", Tensor::matrix(1, 1, vec![-0.0]));
        let text = checkpoint_csv(&p);
        assert!(text.starts_with("encoder/layer0/W,2x2,0.1,"));
        let back = parse_checkpoint(&text).unwrap();
        assert_eq!(checkpoint_csv(&back), text);
    }

    #[test]
    fn checkpoint_rejects_bad_lines() {
        assert!(parse_checkpoint("bogus/x,1x1,0").is_err());
        assert!(parse_checkpoint("task/out/b,1x2,0").is_err());
    }

    #[test]
    fn csv_leaves_absent_losses_empty() {
        let h = TrainHistory {
            records: vec![StepRecord {
                iter: 0,
                kind: StepKind::Adversary,
                task_loss: None,
                adv_loss: Some(0.5),
                lambda: 1.0,
                ms: 0.0,
            }],
            warnings: vec![],
        };
        assert_eq!(
            h.to_csv(),
            "iter,kind,task_loss,adv_loss,lambda,ms\n0,adversary,,0.5,1,0\n"
        );
    }
}
