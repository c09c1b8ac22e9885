//! The resolving loop for the optimal weights.
//!
//! With a basis `(I, J)` fixed, every iteration solves the `d₂ × d₂` system
//! `Â[J, I]·x̃[I] = cⁿ/(N − n + 1)` built from all samples seen so far, scales
//! the solution back into the ℓ₁ ball of radius `C`, draws one fresh
//! transition per binding pair, and charges the realized consumption `Aⁿ·xⁿ`
//! against the running budget `cⁿ`. The output is the average iterate.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::alp::{ConstraintSet, Pair, SampleStore};
use crate::linalg::{dot, lu_factor, vector_norm, DenseMatrix, DenseVector, NormKind};
use crate::lp::{dual_solution, simplex_solve, Basis, LpError, LpStatus, StandardLp};
use crate::mdp::{FeatureMap, GenerativeModel, StateId};
use crate::rng::{self, tag, StreamRng};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResolverError {
    #[error("the resolver needs a nonempty basis")]
    EmptyBasis,
    #[error("iteration count must be at least 1")]
    NoIterations,
    #[error("projection radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("basis row {0} outside the constraint set")]
    RowOutOfRange(usize),
    #[error("the estimated basis system is singular")]
    SingularEstimate,
    #[error("the benchmark LP has no optimal solution")]
    UnboundedBenchmark,
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolverConfig {
    /// `N`, the number of resolving steps.
    pub iterations: usize,
    /// `C`; defaults to `2‖x̂‖₁ + 1` for the warm-start solution `x̂`.
    pub radius: Option<f64>,
    pub basis: Basis,
    pub seed: u64,
}

/// Per-pair running statistics over the columns `I`.
#[derive(Debug, Clone)]
struct RowStats {
    pair: Pair,
    phi: Vec<f64>,
    next_sum: Vec<f64>,
    count: usize,
}

/// Mutable state of the loop.
#[derive(Debug, Clone)]
pub struct ResolverState {
    n: usize,
    horizon: usize,
    gamma: f64,
    vars: Vec<usize>,
    rows: Vec<RowStats>,
    budget: Vec<f64>,
    initial_budget: Vec<f64>,
    consumed: Vec<f64>,
    /// Neumaier compensation for `consumed`.
    consumed_err: Vec<f64>,
    x_sum: Vec<f64>,
    queries: usize,
    warm_start_samples: usize,
    singular: usize,
}

fn select(v: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| v[i]).collect()
}

impl ResolverState {
    /// State at `n = 1`: budget `N·c[J]` and the warm-start samples of `J`.
    pub fn new(
        model: &dyn GenerativeModel,
        features: &dyn FeatureMap,
        constraints: &ConstraintSet,
        basis: &Basis,
        horizon: usize,
        warm_start: Option<&SampleStore>,
    ) -> Result<Self, ResolverError> {
        if basis.is_empty() {
            return Err(ResolverError::EmptyBasis);
        }
        if horizon == 0 {
            return Err(ResolverError::NoIterations);
        }
        if let Some(&k) = basis.rows().iter().find(|&&k| k >= constraints.len()) {
            return Err(ResolverError::RowOutOfRange(k));
        }
        let vars = basis.vars().to_vec();
        let d2 = vars.len();
        let mut rows = Vec::with_capacity(d2);
        let mut warm_start_samples = 0;
        for &k in basis.rows() {
            let pair = constraints.pair(k);
            let mut stats = RowStats {
                pair,
                phi: select(&features.evaluate(pair.0), &vars),
                next_sum: vec![0.0; d2],
                count: 0,
            };
            if let Some(store) = warm_start {
                for &next in store.samples(pair) {
                    stats.add(&select(&features.evaluate(next), &vars));
                    warm_start_samples += 1;
                }
            }
            rows.push(stats);
        }
        let budget: Vec<f64> = rows.iter().map(|r| horizon as f64 * model.cost(r.pair.0, r.pair.1)).collect();
        Ok(Self {
            n: 1,
            horizon,
            gamma: model.discount(),
            x_sum: vec![0.0; features.dim()],
            consumed: vec![0.0; d2],
            consumed_err: vec![0.0; d2],
            initial_budget: budget.clone(),
            budget,
            vars,
            rows,
            queries: warm_start_samples,
            warm_start_samples,
            singular: 0,
        })
    }

    /// Current iteration, 1-based; `N + 1` once finished.
    pub fn iteration(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn is_finished(&self) -> bool {
        self.n > self.horizon
    }

    pub fn budget(&self) -> &[f64] {
        &self.budget
    }

    pub fn initial_budget(&self) -> &[f64] {
        &self.initial_budget
    }

    /// `Σ Aⁿ·xⁿ[I]` over completed iterations.
    pub fn consumed(&self) -> Vec<f64> {
        self.consumed.iter().zip(&self.consumed_err).map(|(s, e)| s + e).collect()
    }

    pub fn x_sum(&self) -> &[f64] {
        &self.x_sum
    }

    /// Generative-model calls so far, warm-start samples included.
    pub fn queries(&self) -> usize {
        self.queries
    }

    pub fn warm_start_samples(&self) -> usize {
        self.warm_start_samples
    }

    pub fn singular_iterations(&self) -> usize {
        self.singular
    }

    pub fn pairs(&self) -> Vec<Pair> {
        self.rows.iter().map(|r| r.pair).collect()
    }

    fn missing(&self) -> Vec<usize> {
        (0..self.rows.len()).filter(|&j| self.rows[j].count == 0).collect()
    }

    /// `Â[J, I]` from the samples seen so far.
    pub fn estimate(&self) -> DenseMatrix {
        let d2 = self.rows.len();
        let mut data = Vec::with_capacity(d2 * d2);
        for r in &self.rows {
            let scale = if r.count == 0 { 0.0 } else { self.gamma / r.count as f64 };
            data.extend(r.phi.iter().zip(&r.next_sum).map(|(p, s)| p - scale * s));
        }
        DenseMatrix::from_vec_unchecked(d2, d2, data)
    }

    /// Right-hand side `cⁿ/(N − n + 1)`.
    pub fn scaled_budget(&self) -> Vec<f64> {
        let remaining = (self.horizon + 1 - self.n) as f64;
        self.budget.iter().map(|b| b / remaining).collect()
    }

    /// `x̃ⁿ`, zero outside `I`, with the solve residual `‖Âx̃ − rhs‖∞`.
    pub fn solve_iterate(&self, d1: usize) -> Result<(DenseVector, f64), ResolverError> {
        let a_hat = self.estimate();
        let rhs = self.scaled_budget();
        let lu = lu_factor(&a_hat).map_err(|_| ResolverError::SingularEstimate)?;
        let z = lu.solve(&rhs);
        let fitted = a_hat.mul_vec(&z).map_err(LpError::from)?;
        let residual = fitted.iter().zip(&rhs).map(|(f, b)| (f - b).abs()).fold(0.0, f64::max);
        let mut x = vec![0.0; d1];
        for (&i, zi) in self.vars.iter().zip(&z) {
            x[i] = *zi;
        }
        Ok((DenseVector::new(x).map_err(|_| ResolverError::SingularEstimate)?, residual))
    }

    /// Adds fresh transitions, one per binding pair in `J` order.
    pub fn record_samples(&mut self, features: &dyn FeatureMap, samples: &[StateId]) {
        assert_eq!(samples.len(), self.rows.len(), "one sample per binding pair");
        for (r, &next) in self.rows.iter_mut().zip(samples) {
            r.add(&select(&features.evaluate(next), &self.vars));
        }
    }

    /// `cⁿ⁺¹ = cⁿ − Aⁿ·xⁿ[I]`, then advances `n`.
    ///
    /// The budget is kept as `c¹` minus a compensated running sum of the
    /// consumption, so the two stay consistent over long horizons.
    pub fn update_budget(&mut self, a_n: &DenseMatrix, x: &[f64]) {
        let x_i = select(x, &self.vars);
        for j in 0..self.budget.len() {
            let used = dot(a_n.row(j), &x_i);
            let (sum, err) = (self.consumed[j], &mut self.consumed_err[j]);
            let t = sum + used;
            *err += if sum.abs() >= used.abs() { (sum - t) + used } else { (used - t) + sum };
            self.consumed[j] = t;
            self.budget[j] = self.initial_budget[j] - (t + *err);
        }
        for (s, xi) in self.x_sum.iter_mut().zip(x) {
            *s += xi;
        }
        self.n += 1;
    }
}

impl RowStats {
    fn add(&mut self, phi_next: &[f64]) {
        for (s, f) in self.next_sum.iter_mut().zip(phi_next) {
            *s += f;
        }
        self.count += 1;
    }
}

/// Radial scaling into `{x : ‖x‖₁ ≤ C}`.
pub fn project_l1(x: &DenseVector, radius: f64) -> DenseVector {
    let norm = vector_norm(x, NormKind::One);
    if norm <= radius {
        return x.clone();
    }
    DenseVector::from_vec_unchecked(x.iter().map(|v| v * (radius / norm)).collect())
}

/// One transition per pair and the sample matrix with rows
/// `φ(s)[I] − γ·φ(s′)[I]`.
pub fn sample_and_build(
    model: &dyn GenerativeModel,
    features: &dyn FeatureMap,
    pairs: &[Pair],
    vars: &[usize],
    rng: &mut StreamRng,
) -> (Vec<StateId>, DenseMatrix) {
    let gamma = model.discount();
    let mut samples = Vec::with_capacity(pairs.len());
    let mut data = Vec::with_capacity(pairs.len() * vars.len());
    for &(s, a) in pairs {
        let next = model.sample_next(s, a, rng);
        let phi = features.evaluate(s);
        let phi_next = features.evaluate(next);
        data.extend(vars.iter().map(|&i| phi[i] - gamma * phi_next[i]));
        samples.push(next);
    }
    (samples, DenseMatrix::from_vec_unchecked(pairs.len(), vars.len(), data))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub n: usize,
    /// `‖x̃ⁿ‖₁` before projection (0 after a singular solve).
    pub l1_norm: f64,
    pub projected: bool,
    pub residual: f64,
    pub budget_min: f64,
    pub budget_max: f64,
    pub queries: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResolveTrace {
    pub records: Vec<TraceRecord>,
}

impl ResolveTrace {
    pub const CSV_HEADER: &'static str = "n,l1_norm,projected,residual,budget_min,budget_max,queries";

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.n, r.l1_norm, r.projected, r.residual, r.budget_min, r.budget_max, r.queries
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ResolveOutcome {
    /// `x̄ᴺ = (1/N)·Σ xⁿ`.
    pub x_bar: DenseVector,
    pub state: ResolverState,
    pub trace: ResolveTrace,
    pub radius: f64,
}

impl ResolveOutcome {
    pub fn queries(&self) -> usize {
        self.state.queries
    }
}

/// Runs the loop for `config.iterations` steps.
pub fn resolve(
    model: &dyn GenerativeModel,
    features: &dyn FeatureMap,
    constraints: &ConstraintSet,
    config: &ResolverConfig,
    warm_start: Option<&SampleStore>,
) -> Result<ResolveOutcome, ResolverError> {
    resolve_observed(model, features, constraints, config, warm_start, &mut |_| {})
}

/// [`resolve`], calling `observer` after every iteration.
pub fn resolve_observed(
    model: &dyn GenerativeModel,
    features: &dyn FeatureMap,
    constraints: &ConstraintSet,
    config: &ResolverConfig,
    warm_start: Option<&SampleStore>,
    observer: &mut dyn FnMut(&ResolverState),
) -> Result<ResolveOutcome, ResolverError> {
    let d1 = features.dim();
    let mut state = ResolverState::new(model, features, constraints, &config.basis, config.iterations, warm_start)?;
    let pairs = state.pairs();

    let missing = state.missing();
    if !missing.is_empty() {
        let mut rng = rng::stream(config.seed, &[tag::RESOLVE, 0]);
        let mut samples = Vec::with_capacity(pairs.len());
        for (j, &(s, a)) in pairs.iter().enumerate() {
            if missing.contains(&j) {
                let next = model.sample_next(s, a, &mut rng);
                state.rows[j].add(&select(&features.evaluate(next), &state.vars));
                samples.push(next);
            }
        }
        state.queries += samples.len();
    }

    let radius = match config.radius {
        Some(c) => c,
        None => {
            let c_j: Vec<f64> = pairs.iter().map(|&(s, a)| model.cost(s, a)).collect();
            let lu = lu_factor(&state.estimate()).map_err(|_| ResolverError::SingularEstimate)?;
            2.0 * vector_norm(&lu.solve(&c_j), NormKind::One) + 1.0
        }
    };
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(ResolverError::InvalidRadius(radius));
    }

    let mut trace = ResolveTrace { records: Vec::with_capacity(config.iterations) };
    while !state.is_finished() {
        let n = state.n;
        let (x, l1_norm, projected, residual) = match state.solve_iterate(d1) {
            Ok((x_tilde, residual)) => {
                let norm = vector_norm(&x_tilde, NormKind::One);
                let x = project_l1(&x_tilde, radius);
                (x, norm, norm > radius, residual)
            }
            Err(ResolverError::SingularEstimate) => {
                state.singular += 1;
                (DenseVector::zeros(d1), 0.0, false, f64::NAN)
            }
            Err(e) => return Err(e),
        };
        let mut rng = rng::stream(config.seed, &[tag::RESOLVE, n as u64]);
        let (samples, a_n) = sample_and_build(model, features, &pairs, &state.vars, &mut rng);
        state.queries += samples.len();
        state.update_budget(&a_n, &x);
        state.record_samples(features, &samples);
        let (budget_min, budget_max) =
            state.budget.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &b| (lo.min(b), hi.max(b)));
        trace.records.push(TraceRecord {
            n,
            l1_norm,
            projected,
            residual,
            budget_min,
            budget_max,
            queries: state.queries,
        });
        observer(&state);
    }

    let x_bar = DenseVector::from_vec_unchecked(state.x_sum.iter().map(|s| s / config.iterations as f64).collect());
    Ok(ResolveOutcome { x_bar, state, trace, radius })
}

/// Regret and violation of a finished run against the exact LP.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretReport {
    pub iterations: usize,
    pub optimal_value: f64,
    /// `N·V − Σ rᵀxⁿ`.
    pub objective_regret: f64,
    /// `|N·c_j − Σ A_j·xⁿ|` for each binding row `j ∈ J`.
    pub violation: Vec<f64>,
    pub max_violation: f64,
    /// `Σ_j y*_j·c_jᴺ⁺¹` with `y*` the complementary dual of the basis.
    pub budget_bound: f64,
    /// `max_j |c¹_j − cᴺ⁺¹_j − Σ Aⁿ_j·xⁿ|`.
    pub telescoping_error: f64,
}

pub fn regret_accounting(
    lp_exact: &StandardLp,
    basis: &Basis,
    state: &ResolverState,
) -> Result<RegretReport, ResolverError> {
    let sol = simplex_solve(lp_exact)?;
    if sol.status != LpStatus::Optimal {
        return Err(ResolverError::UnboundedBenchmark);
    }
    let n = (state.n - 1) as f64;
    let objective_regret = n * sol.objective - dot(lp_exact.r(), &state.x_sum);
    let violation: Vec<f64> = basis
        .rows()
        .iter()
        .map(|&k| (n * lp_exact.c()[k] - dot(lp_exact.a().row(k), &state.x_sum)).abs())
        .collect();
    let y = dual_solution(lp_exact, basis)?;
    let budget_bound = basis.rows().iter().zip(&state.budget).map(|(&k, b)| y[k] * b).sum();
    let telescoping_error = state
        .initial_budget
        .iter()
        .zip(&state.budget)
        .zip(state.consumed())
        .map(|((c1, c_end), used)| (c1 - c_end - used).abs())
        .fold(0.0, f64::max);
    Ok(RegretReport {
        iterations: state.n - 1,
        optimal_value: sol.objective,
        objective_regret,
        max_violation: violation.iter().copied().fold(0.0, f64::max),
        violation,
        budget_bound,
        telescoping_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_examples() {
        let x = DenseVector::new(vec![3.0, -3.0]).unwrap();
        assert_eq!(project_l1(&x, 3.0).as_slice(), &[1.5, -1.5]);
        assert_eq!(project_l1(&x, 12.0), x);
        let y = project_l1(&DenseVector::new(vec![0.1, 7.0, -2.0, 0.0]).unwrap(), 0.3);
        assert!(vector_norm(&y, NormKind::One) <= 0.3 + 1e-12);
        assert_eq!(y[3], 0.0);
    }
}
