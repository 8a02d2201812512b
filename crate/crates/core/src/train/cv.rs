use serde::{Deserialize, Serialize};

use super::metrics::{MeanStd, Scores};
use super::trainer::{evaluate, train_discrete, TrainConfig};
use crate::error::Result;
use crate::exec::Exec;
use crate::hin::{Fold, SplitSet, TargetTask};
use crate::hop::SearchSpace;
use crate::model::{Architecture, Model};
use crate::search::{search, selection_frequency, FrequencyTable, SearchConfig};

/// Architecture aggregating every reachable type at every hop.
pub fn all_nodes_baseline(space: &SearchSpace) -> Architecture {
    let idx: Vec<usize> = (1..=space.hops()).map(|k| space.full_index(k)).collect();
    Architecture::from_indices(space, &idx)
}

/// What each cross-validation run retrains.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Fixed(Architecture),
    AllNodes,
    /// Search on the run's train/valid split first (with the run's seed).
    Search(SearchConfig),
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::Fixed(a) => a.to_string(),
            Method::AllNodes => "all nodes".into(),
            Method::Search(c) => format!("search ({})", serde_json::to_value(c.strategy).unwrap().as_str().unwrap()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub fold: usize,
    pub seed: u64,
    pub architecture: Architecture,
    pub valid: Scores,
    pub test: Scores,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub runs: usize,
    pub macro_f1: MeanStd,
    pub micro_f1: MeanStd,
    pub per_run: Vec<RunResult>,
    pub frequency: Option<FrequencyTable>,
}

impl EvalReport {
    pub fn from_runs(method: String, per_run: Vec<RunResult>, with_frequency: bool) -> Result<Self> {
        let ma: Vec<f64> = per_run.iter().map(|r| r.test.macro_f1).collect();
        let mi: Vec<f64> = per_run.iter().map(|r| r.test.micro_f1).collect();
        let frequency = if with_frequency {
            let archs: Vec<Architecture> = per_run.iter().map(|r| r.architecture.clone()).collect();
            Some(selection_frequency(&archs)?)
        } else {
            None
        };
        Ok(EvalReport {
            method,
            runs: per_run.len(),
            macro_f1: MeanStd::of(&ma),
            micro_f1: MeanStd::of(&mi),
            per_run,
            frequency,
        })
    }

    pub fn markdown_row(&self) -> String {
        format!("| {} | {} | {} |", self.method, self.macro_f1.percent(), self.micro_f1.percent())
    }
}

pub fn markdown_table(reports: &[EvalReport]) -> String {
    let mut s = String::from("| Method | Macro-F1 | Micro-F1 |\n|---|---|---|\n");
    for r in reports {
        s.push_str(&r.markdown_row());
        s.push('\n');
    }
    s
}

/// One (fold, seed) run: optional search, retrain, test evaluation.
pub fn run_once(model: &Model<'_>, task: &TargetTask, method: &Method, cfg: &TrainConfig, fold_index: usize, fold: &Fold, seed: u64) -> Result<RunResult> {
    let architecture = match method {
        Method::Fixed(a) => a.clone(),
        Method::AllNodes => all_nodes_baseline(model.space),
        Method::Search(sc) => {
            let sc = SearchConfig { seed, ..sc.clone() };
            search(model, task, fold, &sc)?.0
        }
    };
    let cfg = TrainConfig { seed, ..cfg.clone() };
    let (params, history) = train_discrete(model, task, &architecture, fold, &cfg)?;
    Ok(RunResult {
        fold: fold_index,
        seed,
        valid: evaluate(model, &params, task, &architecture, &fold.valid)?,
        test: evaluate(model, &params, task, &architecture, &fold.test)?,
        architecture,
        epochs: history.epochs.len(),
    })
}

/// Every fold crossed with every seed; runs are reported fold-major.
pub fn cross_validate(
    model: &Model<'_>,
    task: &TargetTask,
    method: &Method,
    cfg: &TrainConfig,
    splits: &SplitSet,
    seeds: &[u64],
    exec: Exec,
) -> Result<EvalReport> {
    let jobs: Vec<(usize, u64)> = (0..splits.folds.len())
        .flat_map(|f| seeds.iter().map(move |&s| (f, s)))
        .collect();
    let runs = exec
        .map_slice(&jobs, |&(f, s)| run_once(model, task, method, cfg, f, &splits.folds[f], s))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    EvalReport::from_runs(method.name(), runs, matches!(method, Method::Search(_)))
}
