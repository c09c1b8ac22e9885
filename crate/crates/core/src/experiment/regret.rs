use std::io::Write;

use rand::RngCore;
use serde::Serialize;

use super::{ExperimentConfig, ExperimentError, TabularSpec};
use crate::alp::{build_exact_lp, grid_constraints, ConstraintSet, StateRelevance};
use crate::lp::{simplex_solve, Basis, LpStatus, StandardLp};
use crate::mdp::{FeatureTable, TabularMdp};
use crate::par::{map_indexed, Execution};
use crate::resolver::{regret_accounting, resolve, RegretReport, ResolverConfig, ResolverError};
use crate::rng::{self, tag};

/// A finite MDP with everything the regret study needs precomputed: the
/// exact LP over all pairs and its optimal basis.
#[derive(Debug, Clone)]
pub struct TabularInstance {
    pub model: TabularMdp,
    pub features: FeatureTable,
    pub constraints: ConstraintSet,
    pub relevance: StateRelevance,
    pub lp_exact: StandardLp,
    pub basis: Basis,
    pub optimal_value: f64,
}

impl TabularInstance {
    pub fn new(model: TabularMdp, features: FeatureTable) -> Result<Self, ExperimentError> {
        use crate::mdp::GenerativeModel;
        let constraints = grid_constraints(model.num_states(), model.num_actions())?;
        let relevance = StateRelevance::uniform(model.num_states())?;
        let lp_exact = build_exact_lp(&model, &features, &constraints, &relevance, Execution::Sequential)?;
        let sol = simplex_solve(&lp_exact)?;
        if sol.status != LpStatus::Optimal {
            return Err(ResolverError::UnboundedBenchmark.into());
        }
        Ok(Self { model, features, constraints, relevance, lp_exact, basis: sol.basis, optimal_value: sol.objective })
    }

    pub fn from_spec(cfg: &ExperimentConfig, spec: &TabularSpec) -> Result<Self, ExperimentError> {
        let (model, features) = cfg.tabular(spec)?;
        Self::new(model, features)
    }
}

/// Three states, two actions, γ = 0.9, one-hot features.
pub fn stochastic_instance() -> TabularInstance {
    let transitions = vec![
        vec![vec![0.5, 0.3, 0.2], vec![0.1, 0.6, 0.3]],
        vec![vec![0.3, 0.4, 0.3], vec![0.2, 0.2, 0.6]],
        vec![vec![0.6, 0.2, 0.2], vec![0.3, 0.3, 0.4]],
    ];
    let costs = vec![vec![0.8, 0.5], vec![0.3, 0.9], vec![0.6, 0.2]];
    let model = TabularMdp::new(transitions, costs, 0.9).expect("valid kernel");
    TabularInstance::new(model, FeatureTable::identity(3).expect("nonempty")).expect("bounded LP")
}

/// Same costs as [`stochastic_instance`] on a deterministic kernel.
pub fn deterministic_instance() -> TabularInstance {
    let next = vec![vec![1, 2], vec![2, 0], vec![0, 1]];
    let costs = vec![vec![0.8, 0.5], vec![0.3, 0.9], vec![0.6, 0.2]];
    let model = TabularMdp::deterministic(next, costs, 0.9).expect("valid kernel");
    TabularInstance::new(model, FeatureTable::identity(3).expect("nonempty")).expect("bounded LP")
}

/// Seed-mean regret statistics at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub seeds: usize,
    pub mean_regret: f64,
    pub sd_regret: f64,
    pub mean_max_violation: f64,
    /// Seed mean of the dual-weighted final budget `Σ y*_j·c_jᴺ⁺¹`.
    pub mean_budget_bound: f64,
    pub max_telescoping_error: f64,
}

/// Seed used by replication `r` of a study with base seed `seed`.
pub fn replication_seed(seed: u64, r: usize) -> u64 {
    rng::stream(seed, &[tag::REPLICATION, r as u64]).next_u64()
}

/// Runs the resolver on the optimal basis `seeds` times for every horizon in
/// `iterations`, without warm start, and reports each run.
pub fn regret_replications(
    instance: &TabularInstance,
    iterations: &[usize],
    seeds: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<Vec<RegretReport>>, ExperimentError> {
    if seeds == 0 || iterations.contains(&0) {
        return Err(ExperimentError::Config("regret study needs seeds >= 1 and iteration counts >= 1".into()));
    }
    let jobs = iterations.len() * seeds;
    let results = map_indexed(exec, jobs, |job| {
        let (i, r) = (job / seeds, job % seeds);
        let config = ResolverConfig {
            iterations: iterations[i],
            radius: None,
            basis: instance.basis.clone(),
            seed: replication_seed(seed, r),
        };
        let out = resolve(&instance.model, &instance.features, &instance.constraints, &config, None)?;
        regret_accounting(&instance.lp_exact, &instance.basis, &out.state)
    });
    let mut grouped = Vec::with_capacity(iterations.len());
    let mut it = results.into_iter();
    for _ in iterations {
        grouped.push(it.by_ref().take(seeds).collect::<Result<Vec<_>, _>>()?);
    }
    Ok(grouped)
}

pub fn summarize(n: usize, reports: &[RegretReport]) -> RegretRow {
    let k = reports.len() as f64;
    let mean = |f: &dyn Fn(&RegretReport) -> f64| reports.iter().map(f).sum::<f64>() / k;
    let mean_regret = mean(&|r| r.objective_regret);
    let var = mean(&|r| (r.objective_regret - mean_regret).powi(2));
    RegretRow {
        n,
        seeds: reports.len(),
        mean_regret,
        sd_regret: var.sqrt(),
        mean_max_violation: mean(&|r| r.max_violation),
        mean_budget_bound: mean(&|r| r.budget_bound),
        max_telescoping_error: reports.iter().map(|r| r.telescoping_error).fold(0.0, f64::max),
    }
}

/// One row per horizon in `cfg.regret_iterations`, `cfg.regret_seeds`
/// replications each.
pub fn run_synthetic_regret_study(
    instance: &TabularInstance,
    cfg: &ExperimentConfig,
    exec: Execution,
) -> Result<Vec<RegretRow>, ExperimentError> {
    let grouped = regret_replications(instance, &cfg.regret_iterations, cfg.regret_seeds, cfg.seed, exec)?;
    Ok(cfg.regret_iterations.iter().zip(&grouped).map(|(&n, reps)| summarize(n, reps)).collect())
}

pub fn write_regret_csv(rows: &[RegretRow], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
