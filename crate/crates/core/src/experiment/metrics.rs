use std::io::Write;

use serde::Serialize;

use super::ExperimentError;
use crate::linalg::{dot, vector_norm, NormKind};
use crate::lp::{simplex_solve, LpStatus, StandardLp};

const ZERO_BENCHMARK: f64 = 1e-12;

/// One checkpoint of a resolving run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsRow {
    #[serde(rename = "T")]
    pub t: usize,
    pub queries: usize,
    pub rel_obj_gap: f64,
    pub rel_sol_gap: f64,
    pub max_violation: f64,
}

/// `|y_real − y| / |y_real|`.
pub fn rel_obj_gap(y_real: f64, y: f64) -> Result<f64, ExperimentError> {
    if y_real.abs() < ZERO_BENCHMARK {
        return Err(ExperimentError::ZeroBenchmark);
    }
    Ok((y_real - y).abs() / y_real.abs())
}

/// Relative objective gap of `x_resolve` against the optimum of `lp_benchmark`.
pub fn metric_rel_obj_gap(lp_benchmark: &StandardLp, x_resolve: &[f64]) -> Result<f64, ExperimentError> {
    let sol = simplex_solve(lp_benchmark)?;
    if sol.status != LpStatus::Optimal {
        return Err(ExperimentError::Lp(crate::lp::LpError::Invalid("benchmark LP is unbounded".into())));
    }
    rel_obj_gap(sol.objective, dot(lp_benchmark.r(), x_resolve))
}

/// `‖x_real − x_resolve‖₂ / ‖x_real‖₂`.
pub fn metric_rel_sol_gap(x_real: &[f64], x_resolve: &[f64]) -> Result<f64, ExperimentError> {
    assert_eq!(x_real.len(), x_resolve.len(), "solution lengths");
    let scale = vector_norm(x_real, NormKind::Two);
    if scale < ZERO_BENCHMARK {
        return Err(ExperimentError::ZeroBenchmark);
    }
    let diff: Vec<f64> = x_real.iter().zip(x_resolve).map(|(a, b)| a - b).collect();
    Ok(vector_norm(&diff, NormKind::Two) / scale)
}

pub fn write_metrics_csv(rows: &[MetricsRow], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
