//! Experiment harness: the identification-then-resolving pipeline, its
//! metrics, the success-rate comparison, and the synthetic regret study.

mod config;
mod metrics;
mod pipeline;
mod regret;
mod success;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alp::{AlpError, BasisLabels};
use crate::basis::BasisError;
use crate::lp::LpError;
use crate::mdp::{MdpError, MountainCarParams};
use crate::resolver::ResolverError;

pub use config::{Environment, ExperimentConfig, RbfConfig, RelevanceMode, TabularSpec};
pub use metrics::{metric_rel_obj_gap, metric_rel_sol_gap, rel_obj_gap, write_metrics_csv, MetricsRow};
pub use pipeline::{checkpoints, run_experiment, run_mountain_car_experiment, run_pipeline, PipelineReport};
pub use regret::{
    deterministic_instance, regret_replications, replication_seed, run_synthetic_regret_study, summarize, stochastic_instance, write_regret_csv, RegretRow,
    TabularInstance,
};
pub use success::{non_resolving_weights, resolving_weights, run_success_rate_comparison, write_success_csv, Method, SuccessRow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("benchmark value is zero; relative gaps are undefined")]
    ZeroBenchmark,
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error(transparent)]
    Alp(#[from] AlpError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Resolver(#[from] ResolverError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

impl ExperimentError {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            ExperimentError::Config(_) | ExperimentError::Mdp(_) => false,
            ExperimentError::Alp(e) => !matches!(e, AlpError::Store(_) | AlpError::InvalidRelevance),
            _ => true,
        }
    }
}

/// Learned weights with the basis they were resolved on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    pub basis: Option<BasisLabels>,
    pub weights: Vec<f64>,
    /// Mountain Car setting the weights were trained for.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environment: Option<MountainCarParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rbf: Option<RbfConfig>,
}
