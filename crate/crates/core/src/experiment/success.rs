use std::io::Write;

use serde::Serialize;

use super::regret::replication_seed;
use super::{ExperimentConfig, ExperimentError};
use crate::alp::{build_estimated_lp_with, grid_constraints, SampleStore};
use crate::basis::{identify_basis_simplex, BasisError};
use crate::lp::{simplex_solve, LpStatus};
use crate::mdp::{rollout_success, FeatureTable, GenerativeModel, GreedyPolicy, MountainCarModel};
use crate::par::Execution;
use crate::resolver::{resolve, ResolverConfig};
use crate::rng::tag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Resolving,
    NonResolving,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessRow {
    /// Total samples per constraint pair.
    pub budget: usize,
    pub method: Method,
    pub seed: u64,
    pub success_rate: f64,
    pub queries: usize,
}

/// Weights from `budget / 2` samples per pair for identification and the
/// remaining `budget − budget / 2` per pair spent as resolving steps.
pub fn resolving_weights(
    model: &MountainCarModel,
    features: &FeatureTable,
    cfg: &ExperimentConfig,
    budget: usize,
    seed: u64,
    exec: Execution,
) -> Result<(Vec<f64>, usize), ExperimentError> {
    let constraints = grid_constraints(model.num_states(), model.num_actions())?;
    let relevance = cfg.relevance(model.num_states())?;
    let id_per_pair = (budget / 2).max(1);
    let store = SampleStore::draw(model, constraints.pairs(), id_per_pair, seed, &[tag::IDENTIFICATION], exec);
    let estimated = build_estimated_lp_with(model, features, &constraints, &store, &relevance, exec)?;
    let basis = match identify_basis_simplex(&estimated) {
        Ok(b) if !b.is_empty() => b,
        Ok(_) | Err(BasisError::UnboundedEstimate) => return Ok((vec![0.0; features.matrix().cols()], store.total())),
        Err(e) => return Err(e.into()),
    };
    let remaining = budget.saturating_sub(id_per_pair) * constraints.len();
    let iterations = (remaining / basis.size()).max(1);
    let config = ResolverConfig { iterations, radius: cfg.radius, basis, seed };
    let out = resolve(model, features, &constraints, &config, Some(&store))?;
    Ok((out.x_bar.to_vec(), store.total() + out.state.queries() - out.state.warm_start_samples()))
}

/// Weights from solving the estimated LP built on `budget` samples per pair.
pub fn non_resolving_weights(
    model: &MountainCarModel,
    features: &FeatureTable,
    cfg: &ExperimentConfig,
    budget: usize,
    seed: u64,
    exec: Execution,
) -> Result<(Vec<f64>, usize), ExperimentError> {
    let constraints = grid_constraints(model.num_states(), model.num_actions())?;
    let relevance = cfg.relevance(model.num_states())?;
    let store = SampleStore::draw(model, constraints.pairs(), budget.max(1), seed, &[tag::IDENTIFICATION], exec);
    let estimated = build_estimated_lp_with(model, features, &constraints, &store, &relevance, exec)?;
    let sol = simplex_solve(&estimated)?;
    let weights = match sol.status {
        LpStatus::Optimal => sol.x.to_vec(),
        _ => vec![0.0; features.matrix().cols()],
    };
    Ok((weights, store.total()))
}

/// Success rates of both methods at every budget in `cfg.sample_budgets`,
/// for `seeds` independent replications. Both methods of a replication are
/// rolled out on the same episode streams.
pub fn run_success_rate_comparison(
    cfg: &ExperimentConfig,
    seeds: usize,
    exec: Execution,
) -> Result<Vec<SuccessRow>, ExperimentError> {
    cfg.validate()?;
    if seeds == 0 || cfg.sample_budgets.contains(&0) {
        return Err(ExperimentError::Config("success study needs seeds >= 1 and budgets >= 1".into()));
    }
    let (model, features) = cfg.mountain_car()?;
    let mut rows = Vec::new();
    for &budget in &cfg.sample_budgets {
        for r in 0..seeds {
            let seed = replication_seed(cfg.seed, r);
            for method in [Method::Resolving, Method::NonResolving] {
                let (w, queries) = match method {
                    Method::Resolving => resolving_weights(&model, &features, cfg, budget, seed, exec)?,
                    Method::NonResolving => non_resolving_weights(&model, &features, cfg, budget, seed, exec)?,
                };
                let policy = GreedyPolicy::new(&model, &features, &w);
                let success_rate =
                    rollout_success(&model, &|s| policy.action(s), cfg.horizon, cfg.episodes, seed, exec)?;
                rows.push(SuccessRow { budget, method, seed, success_rate, queries });
            }
        }
    }
    Ok(rows)
}

pub fn write_success_csv(rows: &[SuccessRow], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
