use serde::Serialize;

use super::{metrics::rel_obj_gap, metric_rel_sol_gap, Environment, ExperimentConfig, ExperimentError, MetricsRow, PolicyFile};
use crate::alp::{build_estimated_lp_with, build_exact_lp, grid_constraints, BasisLabels, SampleStore};
use crate::basis::{basis_sigma, identify_basis_simplex, verify_basis_optimality, BasisVerdict};
use crate::linalg::dot;
use crate::lp::{basic_solution, check_feasibility, simplex_solve, Basis, LpStatus};
use crate::mdp::{FeatureTable, TransitionOracle};
use crate::par::Execution;
use crate::resolver::{resolve_observed, ResolveTrace, ResolverConfig, ResolverError};
use crate::rng::tag;

/// Result of identification followed by resolving.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub num_constraints: usize,
    pub num_features: usize,
    pub basis: Basis,
    pub basis_labels: BasisLabels,
    /// Classification of the identified basis against the benchmark LP.
    pub basis_verdict: Option<BasisVerdict>,
    pub sigma: f64,
    pub identification_queries: usize,
    pub benchmark_value: f64,
    pub x_real: Vec<f64>,
    /// Solution of the estimated LP (the `T = 0` point).
    pub x_estimated: Vec<f64>,
    pub radius: f64,
    pub rows: Vec<MetricsRow>,
    /// `x̄ᴺ`.
    pub weights: Vec<f64>,
    #[serde(skip)]
    pub trace: ResolveTrace,
}

/// `T = 1, 2, 4, …` up to `n`, plus `n` itself.
pub fn checkpoints(n: usize) -> Vec<usize> {
    let mut out: Vec<usize> = std::iter::successors(Some(1usize), |t| t.checked_mul(2)).take_while(|&t| t <= n).collect();
    if out.last() != Some(&n) {
        out.push(n);
    }
    out
}

/// Full grid of constraints → `L` samples per pair → estimated LP → simplex
/// basis → resolving warm-started from the same samples, scored against the
/// LP built from exact expectations.
pub fn run_pipeline<M: TransitionOracle>(
    model: &M,
    features: &FeatureTable,
    cfg: &ExperimentConfig,
    exec: Execution,
) -> Result<PipelineReport, ExperimentError> {
    cfg.validate()?;
    let constraints = grid_constraints(model.num_states(), model.num_actions())?;
    let relevance = cfg.relevance(model.num_states())?;
    let store = SampleStore::draw(model, constraints.pairs(), cfg.samples_per_pair, cfg.seed, &[tag::IDENTIFICATION], exec);
    let identification_queries = store.total();

    let estimated = build_estimated_lp_with(model, features, &constraints, &store, &relevance, exec)?;
    let est_sol = simplex_solve(&estimated)?;
    if est_sol.status != LpStatus::Optimal {
        return Err(crate::basis::BasisError::UnboundedEstimate.into());
    }
    let basis = identify_basis_simplex(&estimated)?;

    let benchmark = build_exact_lp(model, features, &constraints, &relevance, exec)?;
    let bench_sol = simplex_solve(&benchmark)?;
    if bench_sol.status != LpStatus::Optimal {
        return Err(ResolverError::UnboundedBenchmark.into());
    }
    let y_real = bench_sol.objective;
    let x_real = basic_solution(&benchmark, &basis).map_or_else(|_| bench_sol.x.to_vec(), |x| x.to_vec());
    let basis_verdict = verify_basis_optimality(&benchmark, &basis).ok();
    let sigma = basis_sigma(&benchmark, &basis).unwrap_or(f64::NAN);

    let score = |t: usize, x: &[f64]| -> Result<MetricsRow, ExperimentError> {
        Ok(MetricsRow {
            t,
            queries: identification_queries + basis.size() * t,
            rel_obj_gap: rel_obj_gap(y_real, dot(benchmark.r(), x))?,
            rel_sol_gap: metric_rel_sol_gap(&x_real, x)?,
            max_violation: check_feasibility(&benchmark, x),
        })
    };

    let mut rows = vec![score(0, &est_sol.x)?];
    let marks = checkpoints(cfg.resolve_iterations);
    let mut pending = marks.iter().peekable();
    let mut failure = None;
    let config = ResolverConfig { iterations: cfg.resolve_iterations, radius: cfg.radius, basis: basis.clone(), seed: cfg.seed };
    let outcome = resolve_observed(model, features, &constraints, &config, Some(&store), &mut |state| {
        let t = state.iteration() - 1;
        if pending.peek() == Some(&&t) {
            pending.next();
            let x: Vec<f64> = state.x_sum().iter().map(|s| s / t as f64).collect();
            match score(t, &x) {
                Ok(row) => rows.push(row),
                Err(e) => failure = Some(e),
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }

    Ok(PipelineReport {
        num_constraints: constraints.len(),
        num_features: features.matrix().cols(),
        basis_labels: constraints.label_basis(&basis),
        basis,
        basis_verdict,
        sigma,
        identification_queries,
        benchmark_value: y_real,
        x_real,
        x_estimated: est_sol.x.to_vec(),
        radius: outcome.radius,
        rows,
        weights: outcome.x_bar.to_vec(),
        trace: outcome.trace,
    })
}

/// Runs the pipeline on the configured Mountain Car grid.
pub fn run_mountain_car_experiment(
    cfg: &ExperimentConfig,
    exec: Execution,
) -> Result<(PipelineReport, PolicyFile), ExperimentError> {
    cfg.validate()?;
    let (model, features) = cfg.mountain_car()?;
    let report = run_pipeline(&model, &features, cfg, exec)?;
    let policy = PolicyFile {
        basis: Some(report.basis_labels.clone()),
        weights: report.weights.clone(),
        environment: Some(cfg.mountain_car_params()),
        rbf: Some(cfg.rbf.clone()),
    };
    Ok((report, policy))
}

/// Runs the pipeline on whichever environment `cfg` names.
pub fn run_experiment(cfg: &ExperimentConfig, exec: Execution) -> Result<(PipelineReport, PolicyFile), ExperimentError> {
    match &cfg.environment {
        Environment::MountainCar => run_mountain_car_experiment(cfg, exec),
        Environment::Tabular(spec) => {
            let (model, features) = cfg.tabular(spec)?;
            let report = run_pipeline(&model, &features, cfg, exec)?;
            let policy = PolicyFile { basis: Some(report.basis_labels.clone()), weights: report.weights.clone(), environment: None, rbf: None };
            Ok((report, policy))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_schedule() {
        assert_eq!(checkpoints(1), vec![1]);
        assert_eq!(checkpoints(8), vec![1, 2, 4, 8]);
        assert_eq!(checkpoints(10), vec![1, 2, 4, 8, 10]);
    }
}
