//! Optimal-basis identification and gap diagnostics.

use itertools::Itertools;
use serde::Serialize;
use thiserror::Error;

use crate::alp::rad;
use crate::linalg::{dot, lu_factor, min_abs_eigenvalue, DenseMatrix, LinalgError};
use crate::lp::{
    basic_solution, check_feasibility, simplex_solve, simplex_solve_in, Basis, LpError, LpStatus, StandardLp,
    VariableDomain,
};
use crate::par::{map_indexed, Execution};

/// Largest `d₁` accepted by [`gap_report`].
pub const GAP_MAX_VARS: usize = 8;
/// Largest `K` accepted by [`gap_report`].
pub const GAP_MAX_CONSTRAINTS: usize = 14;
/// Infeasibilities and objective gaps at or below this count as zero.
pub const GAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BasisError {
    #[error("the LP is unbounded; more samples are needed before a basis can be identified")]
    UnboundedEstimate,
    #[error("enumeration limited to d1 <= {GAP_MAX_VARS} and K <= {GAP_MAX_CONSTRAINTS}, got d1 = {d1}, K = {k}")]
    TooLarge { d1: usize, k: usize },
    #[error("every basic solution is feasible and optimal; no gap is defined")]
    NoGap,
    #[error("elimination kept {} variables but {} constraints", .vars.len(), .rows.len())]
    UnequalSets { vars: Vec<usize>, rows: Vec<usize> },
    #[error(transparent)]
    Lp(#[from] LpError),
}

impl From<LinalgError> for BasisError {
    fn from(e: LinalgError) -> Self {
        BasisError::Lp(LpError::Linalg(e))
    }
}

/// Basis reported by the simplex method on `lp`.
pub fn identify_basis_simplex(lp: &StandardLp) -> Result<Basis, BasisError> {
    let sol = simplex_solve(lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.basis),
        _ => Err(BasisError::UnboundedEstimate),
    }
}

/// Optimal value, `+∞` when unbounded.
fn lp_value(lp: &StandardLp, domain: VariableDomain) -> Result<f64, BasisError> {
    let sol = simplex_solve_in(lp, domain)?;
    Ok(match sol.status {
        LpStatus::Optimal => sol.objective,
        _ => f64::INFINITY,
    })
}

/// `max rᵀx` over `A x ≤ c`, `x ≥ 0`, `x` zero outside `vars`.
fn restricted_primal(lp: &StandardLp, vars: &[usize]) -> Result<f64, BasisError> {
    if vars.is_empty() {
        return Ok(0.0);
    }
    lp_value(&lp.select_columns(vars)?, VariableDomain::NonNegative)
}

/// `min cᵀy` over `A[:, I]ᵀ y = r[I]`, `y ≥ 0`, `y` zero outside `rows`,
/// evaluated through its dual `max r[I]ᵀx` over `A[rows, I] x ≤ c[rows]`.
/// An infeasible dual is reported as `+∞`.
fn restricted_dual(lp: &StandardLp, vars: &[usize], rows: &[usize]) -> Result<f64, BasisError> {
    if vars.is_empty() {
        return Ok(0.0);
    }
    if rows.is_empty() {
        let bounded = vars.iter().all(|&i| lp.r()[i] == 0.0);
        return Ok(if bounded { 0.0 } else { f64::INFINITY });
    }
    lp_value(&lp.select_columns(vars)?.select_rows(rows)?, VariableDomain::Free)
}

/// Identification by sequential restriction tests.
///
/// Variables, in ascending order, are fixed at zero whenever doing so moves
/// the (nonnegative) LP value by at most `√Rad(N, ε)`; constraints are then
/// dropped whenever zeroing their dual variable moves the value by at most the
/// same threshold. Restrictions accumulate.
pub fn identify_basis_elimination(lp: &StandardLp, n: usize, eps: f64) -> Result<Basis, BasisError> {
    identify_basis_elimination_with_threshold(lp, rad(n, eps).sqrt())
}

/// [`identify_basis_elimination`] with an explicit threshold.
pub fn identify_basis_elimination_with_threshold(lp: &StandardLp, threshold: f64) -> Result<Basis, BasisError> {
    let all_vars: Vec<usize> = (0..lp.num_vars()).collect();
    let reference = restricted_primal(lp, &all_vars)?;
    if reference.is_infinite() {
        return Err(BasisError::UnboundedEstimate);
    }
    let mut vars = all_vars;
    for i in 0..lp.num_vars() {
        let trial: Vec<usize> = vars.iter().copied().filter(|&v| v != i).collect();
        if (reference - restricted_primal(lp, &trial)?).abs() <= threshold {
            vars = trial;
        }
    }
    let mut rows: Vec<usize> = (0..lp.num_constraints()).collect();
    for k in 0..lp.num_constraints() {
        let trial: Vec<usize> = rows.iter().copied().filter(|&j| j != k).collect();
        if (reference - restricted_dual(lp, &vars, &trial)?).abs() <= threshold {
            rows = trial;
        }
    }
    if vars.len() != rows.len() {
        return Err(BasisError::UnequalSets { vars, rows });
    }
    Ok(Basis::new(vars, rows)?)
}

/// Feasibility gap `δ₁`, suboptimality gap `δ₂`, and `Δ = min(δ₁, δ₂)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub delta: f64,
    pub optimal_value: f64,
    /// Nonsingular bases examined, including the empty basis.
    pub bases: usize,
    pub feasible: usize,
}

#[derive(Default, Clone, Copy)]
struct GapAccumulator {
    delta1: Option<f64>,
    delta2: Option<f64>,
    bases: usize,
    feasible: usize,
}

fn min_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

impl GapAccumulator {
    fn record(&mut self, lp: &StandardLp, optimal_value: f64, x: &[f64]) {
        self.bases += 1;
        let infeasibility = check_feasibility(lp, x);
        if infeasibility > GAP_TOL {
            self.delta1 = min_opt(self.delta1, Some(infeasibility));
        } else {
            self.feasible += 1;
            let gap = optimal_value - lp.objective(x);
            if gap > GAP_TOL {
                self.delta2 = min_opt(self.delta2, Some(gap));
            }
        }
    }

    fn merge(self, other: Self) -> Self {
        Self {
            delta1: min_opt(self.delta1, other.delta1),
            delta2: min_opt(self.delta2, other.delta2),
            bases: self.bases + other.bases,
            feasible: self.feasible + other.feasible,
        }
    }
}

/// Enumerates every basis `(I, J)` with `|I| = |J|`, the empty one included.
pub fn gap_report(lp: &StandardLp) -> Result<GapReport, BasisError> {
    gap_report_with(lp, Execution::default())
}

pub fn gap_report_with(lp: &StandardLp, exec: Execution) -> Result<GapReport, BasisError> {
    let (d1, k) = (lp.num_vars(), lp.num_constraints());
    if d1 > GAP_MAX_VARS || k > GAP_MAX_CONSTRAINTS {
        return Err(BasisError::TooLarge { d1, k });
    }
    let sol = simplex_solve(lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(BasisError::UnboundedEstimate);
    }
    let v = sol.objective;

    let var_sets: Vec<Vec<usize>> = (1..=d1.min(k)).flat_map(|m| (0..d1).combinations(m)).collect();
    let partials = map_indexed(exec, var_sets.len(), |t| {
        let vars = &var_sets[t];
        let mut acc = GapAccumulator::default();
        let mut x = vec![0.0; d1];
        for rows in (0..k).combinations(vars.len()) {
            let Ok(lu) = lu_factor(&lp.a().select(&rows, vars)) else {
                continue;
            };
            let c_j: Vec<f64> = rows.iter().map(|&j| lp.c()[j]).collect();
            let x_i = lu.solve(&c_j);
            x.iter_mut().for_each(|e| *e = 0.0);
            for (&i, xi) in vars.iter().zip(&x_i) {
                x[i] = *xi;
            }
            acc.record(lp, v, &x);
        }
        acc
    });
    let mut total = GapAccumulator::default();
    total.record(lp, v, &vec![0.0; d1]);
    let total = partials.into_iter().fold(total, GapAccumulator::merge);
    let delta = min_opt(total.delta1, total.delta2).ok_or(BasisError::NoGap)?;
    Ok(GapReport {
        delta1: total.delta1,
        delta2: total.delta2,
        delta,
        optimal_value: v,
        bases: total.bases,
        feasible: total.feasible,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BasisVerdict {
    Optimal,
    /// Feasible, with objective below the optimum by the given amount.
    Suboptimal(f64),
    /// Violates some constraint by the given amount.
    Infeasible(f64),
}

/// Classifies the vertex of `basis` against the optimum of `lp`.
pub fn verify_basis_optimality(lp: &StandardLp, basis: &Basis) -> Result<BasisVerdict, BasisError> {
    let x = basic_solution(lp, basis)?;
    let infeasibility = check_feasibility(lp, &x);
    if infeasibility > GAP_TOL {
        return Ok(BasisVerdict::Infeasible(infeasibility));
    }
    let sol = simplex_solve(lp)?;
    if sol.status != LpStatus::Optimal {
        return Ok(BasisVerdict::Suboptimal(f64::INFINITY));
    }
    let gap = sol.objective - dot(lp.r(), &x);
    Ok(if gap > GAP_TOL * (1.0 + sol.objective.abs()) {
        BasisVerdict::Suboptimal(gap)
    } else {
        BasisVerdict::Optimal
    })
}

/// `σ`: the smallest eigenvalue modulus of `A[J, I]`.
pub fn basis_sigma(lp: &StandardLp, basis: &Basis) -> Result<f64, BasisError> {
    if basis.is_empty() {
        return Ok(f64::INFINITY);
    }
    let block: DenseMatrix = basis.submatrix(lp)?;
    Ok(min_abs_eigenvalue(&block)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_bound_lp() -> StandardLp {
        StandardLp::from_parts(vec![1.0], vec![vec![1.0], vec![1.0]], vec![1.0, 2.0]).unwrap()
    }

    #[test]
    fn gap_report_two_bounds() {
        let g = gap_report(&two_bound_lp()).unwrap();
        assert_eq!(g.delta1, Some(1.0));
        // The empty basis (x = 0, value 0) is counted as a feasible basic solution.
        assert_eq!(g.delta2, Some(1.0));
        assert_eq!(g.delta, 1.0);
        assert_eq!(g.bases, 3);
    }

    #[test]
    fn verdicts_on_two_bounds() {
        let lp = two_bound_lp();
        assert_eq!(verify_basis_optimality(&lp, &Basis::new(vec![0], vec![0]).unwrap()).unwrap(), BasisVerdict::Optimal);
        assert_eq!(
            verify_basis_optimality(&lp, &Basis::new(vec![0], vec![1]).unwrap()).unwrap(),
            BasisVerdict::Infeasible(1.0)
        );
        assert_eq!(verify_basis_optimality(&lp, &Basis::empty()).unwrap(), BasisVerdict::Suboptimal(1.0));
    }

    #[test]
    fn too_large_rejected() {
        let lp = StandardLp::from_parts(vec![1.0; 9], vec![vec![1.0; 9]], vec![1.0]).unwrap();
        assert_eq!(gap_report(&lp), Err(BasisError::TooLarge { d1: 9, k: 1 }));
    }

    #[test]
    fn huge_threshold_eliminates_everything() {
        let b = identify_basis_elimination_with_threshold(&two_bound_lp(), 1e6).unwrap();
        assert!(b.is_empty());
    }

    #[test]
    fn simplex_identification_at_origin() {
        let lp = StandardLp::from_parts(vec![0.0], vec![vec![1.0]], vec![1.0]).unwrap();
        assert!(identify_basis_simplex(&lp).unwrap().is_empty());
    }
}
