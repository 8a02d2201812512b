//! Retraining discrete architectures, F1 metrics and the cross-validation
//! harness.

mod cv;
mod metrics;
mod trainer;

pub use cv::{all_nodes_baseline, cross_validate, markdown_table, run_once, EvalReport, Method, RunResult};
pub use metrics::{f1_scores, predictions, MeanStd, Scores};
pub use trainer::{evaluate, train_discrete, TrainConfig, TrainEpoch, TrainHistory};
