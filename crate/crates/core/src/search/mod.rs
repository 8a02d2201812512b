//! Differentiable bilevel search over per-hop candidates, discretization,
//! the exhaustive oracle and selection-frequency tables.

mod bilevel;
mod driver;
mod frequency;
mod objective;
mod oracle;

pub use bilevel::{lambda_gradient, update_lambda, update_theta, BilevelObjective, LambdaGradient, LambdaStep, LossGrads};
pub use driver::{discretize, search, EpochRecord, SearchConfig, SearchTrace, Strategy, TIE_TOLERANCE};
pub use frequency::{selection_frequency, ArchitectureFrequency, CandidateFrequency, FrequencyTable, HopFrequencies};
pub use objective::{Supernet, SupernetMode};
pub use oracle::{exhaustive_oracle, OracleEntry, DEFAULT_ORACLE_CAP};
