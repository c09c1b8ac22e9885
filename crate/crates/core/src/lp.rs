//! Standard-form linear programs and a primal simplex with basis extraction.
//!
//! The problem form is
//!
//! ```text
//! maximize rᵀx  subject to  A x + s = c,  s ≥ 0,  x free
//! ```
//!
//! with `A` of size `K × d₁`. A [`Basis`] is the pair `(I, J)` of basic
//! original variables and binding constraints (those whose slack is nonbasic);
//! the vertex it describes solves `A[J, I] x[I] = c[J]` with `x` zero outside
//! `I`.
//!
//! [`simplex_solve`] starts from the all-slack basis (feasible because
//! `c ≥ 0`), enters the column with the most positive reduced cost, and leaves
//! by the minimum-ratio test. Free variables are split as `x = x⁺ − x⁻`. The
//! tableau is never stored: each pivot refactors the `|J| × |I|` block
//! `A[J, I]`, which is at most `d₁ × d₁`, so the work per pivot is `O(K·d₁)`
//! even for LPs with many thousands of rows.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, lu_factor, lu_solve, DenseMatrix, DenseVector, LinalgError, LuFactors};

/// Threshold for a positive reduced cost and for a positive ratio-test pivot.
pub const PIVOT_TOL: f64 = 1e-9;
/// Primal feasibility slack allowed by the ratio test.
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("invalid LP: {0}")]
    Invalid(String),
    #[error("right-hand side entry c[{row}] = {value} is negative")]
    NegativeRhs { row: usize, value: f64 },
    #[error("pivot limit of {limit} exceeded")]
    CycleLimitExceeded { limit: usize },
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `max rᵀx s.t. A x ≤ c`, `x` free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LpDocument", into = "LpDocument")]
pub struct StandardLp {
    r: DenseVector,
    a: DenseMatrix,
    c: DenseVector,
}

/// JSON layout `{"r": [...], "A": [[...], ...], "c": [...]}`.
#[derive(Serialize, Deserialize)]
struct LpDocument {
    r: Vec<f64>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    c: Vec<f64>,
}

impl TryFrom<LpDocument> for StandardLp {
    type Error = LpError;

    fn try_from(doc: LpDocument) -> Result<Self, LpError> {
        let a = if doc.a.is_empty() {
            DenseMatrix::zeros(0, doc.r.len())
        } else {
            DenseMatrix::from_rows(&doc.a)?
        };
        StandardLp::new(DenseVector::new(doc.r)?, a, DenseVector::new(doc.c)?)
    }
}

impl From<StandardLp> for LpDocument {
    fn from(lp: StandardLp) -> Self {
        LpDocument { r: lp.r.into_vec(), a: lp.a.to_rows(), c: lp.c.into_vec() }
    }
}

impl StandardLp {
    pub fn new(r: DenseVector, a: DenseMatrix, c: DenseVector) -> Result<Self, LpError> {
        if a.rows() == 0 || a.cols() == 0 {
            return Err(LpError::Invalid(format!(
                "need at least one constraint and one variable, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if r.len() != a.cols() {
            return Err(LpError::Invalid(format!("objective has length {}, A has {} columns", r.len(), a.cols())));
        }
        if c.len() != a.rows() {
            return Err(LpError::Invalid(format!("rhs has length {}, A has {} rows", c.len(), a.rows())));
        }
        Ok(Self { r, a, c })
    }

    /// Convenience constructor from plain vectors.
    pub fn from_parts(r: Vec<f64>, a: Vec<Vec<f64>>, c: Vec<f64>) -> Result<Self, LpError> {
        LpDocument { r, a, c }.try_into()
    }

    pub fn num_vars(&self) -> usize {
        self.a.cols()
    }

    pub fn num_constraints(&self) -> usize {
        self.a.rows()
    }

    pub fn r(&self) -> &DenseVector {
        &self.r
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn c(&self) -> &DenseVector {
        &self.c
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        dot(&self.r, x)
    }

    /// The same LP with every constraint matrix entry replaced by `f(row, col, value)`.
    pub fn map_matrix(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Result<Self, LpError> {
        let (k, d) = (self.a.rows(), self.a.cols());
        let mut data = Vec::with_capacity(k * d);
        for i in 0..k {
            for j in 0..d {
                data.push(f(i, j, self.a.get(i, j)));
            }
        }
        Self::new(self.r.clone(), DenseMatrix::new(k, d, data)?, self.c.clone())
    }

    /// The same LP with right-hand side `t·c`.
    pub fn scale_rhs(&self, t: f64) -> Result<Self, LpError> {
        Self::new(self.r.clone(), self.a.clone(), DenseVector::new(self.c.iter().map(|v| v * t).collect())?)
    }

    /// LP over the columns `cols` only (other variables fixed at zero).
    pub(crate) fn select_columns(&self, cols: &[usize]) -> Result<Self, LpError> {
        let rows: Vec<usize> = (0..self.num_constraints()).collect();
        let r = DenseVector::from_vec_unchecked(cols.iter().map(|&j| self.r[j]).collect());
        Self::new(r, self.a.select(&rows, cols), self.c.clone())
    }

    /// LP over the rows `rows` only.
    pub(crate) fn select_rows(&self, rows: &[usize]) -> Result<Self, LpError> {
        let cols: Vec<usize> = (0..self.num_vars()).collect();
        let c = DenseVector::from_vec_unchecked(rows.iter().map(|&k| self.c[k]).collect());
        Self::new(self.r.clone(), self.a.select(rows, &cols), c)
    }
}

/// Index sets `I` (basic original variables) and `J` (binding constraints),
/// both strictly increasing and of equal size `d₂`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "BasisDocument")]
pub struct Basis {
    #[serde(rename = "I")]
    vars: Vec<usize>,
    #[serde(rename = "J")]
    rows: Vec<usize>,
}

#[derive(Deserialize)]
struct BasisDocument {
    #[serde(rename = "I")]
    vars: Vec<usize>,
    #[serde(rename = "J")]
    rows: Vec<usize>,
}

impl TryFrom<BasisDocument> for Basis {
    type Error = LpError;

    fn try_from(doc: BasisDocument) -> Result<Self, LpError> {
        Basis::new(doc.vars, doc.rows)
    }
}

fn strictly_increasing(v: &[usize]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl Basis {
    pub fn new(mut vars: Vec<usize>, mut rows: Vec<usize>) -> Result<Self, LpError> {
        vars.sort_unstable();
        rows.sort_unstable();
        if !strictly_increasing(&vars) || !strictly_increasing(&rows) {
            return Err(LpError::InvalidBasis("duplicate indices".into()));
        }
        if vars.len() != rows.len() {
            return Err(LpError::InvalidBasis(format!("|I| = {} but |J| = {}", vars.len(), rows.len())));
        }
        Ok(Self { vars, rows })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    /// `d₂ = |I| = |J|`.
    pub fn size(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    fn check_against(&self, lp: &StandardLp) -> Result<(), LpError> {
        if self.vars.last().is_some_and(|&i| i >= lp.num_vars()) {
            return Err(LpError::InvalidBasis("variable index out of range".into()));
        }
        if self.rows.last().is_some_and(|&k| k >= lp.num_constraints()) {
            return Err(LpError::InvalidBasis("constraint index out of range".into()));
        }
        Ok(())
    }

    /// The square block `A[J, I]`.
    pub fn submatrix(&self, lp: &StandardLp) -> Result<DenseMatrix, LpError> {
        self.check_against(lp)?;
        Ok(lp.a.select(&self.rows, &self.vars))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    /// Optimal vertex, or the last vertex visited when unbounded.
    pub x: DenseVector,
    pub objective: f64,
    pub basis: Basis,
    pub status: LpStatus,
    pub pivots: usize,
}

/// Sign constraint on the original variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariableDomain {
    Free,
    NonNegative,
}

/// Solves the LP with free variables.
pub fn simplex_solve(lp: &StandardLp) -> Result<LpSolution, LpError> {
    simplex_solve_in(lp, VariableDomain::Free)
}

/// Solves the LP with the given sign constraint on `x`.
pub fn simplex_solve_in(lp: &StandardLp, domain: VariableDomain) -> Result<LpSolution, LpError> {
    if let Some((row, &value)) = lp.c.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(LpError::NegativeRhs { row, value });
    }
    Simplex::new(lp, domain).run()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rule {
    Dantzig,
    Bland,
}

/// Variable numbering: `0..d` are `x⁺`, `d..2d` are `x⁻` (free domain only),
/// then one slack per row.
struct Simplex<'a> {
    lp: &'a StandardLp,
    d: usize,
    k: usize,
    n_struct: usize,
    row_basic: Vec<usize>,
    is_basic: Vec<bool>,
    /// Working right-hand side; perturbed while the main pass runs.
    rhs: Vec<f64>,
}

/// Relative size of the right-hand-side perturbation that breaks ties
/// between degenerate vertices.
const PERTURBATION: f64 = 1e-7;

/// Deterministic value in `[0.5, 1)` for row `k`.
fn jitter(k: usize) -> f64 {
    let mut z = (k as u64).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    0.5 + 0.5 * (z >> 11) as f64 / (1u64 << 53) as f64
}

/// Per-pivot quantities derived from the current basis.
struct BasisView {
    /// `(original index, sign, tableau row)` of each basic structural column.
    structural: Vec<(usize, f64, usize)>,
    /// Binding rows (nonbasic slack), ascending.
    binding: Vec<usize>,
    /// Position of each row in `binding`.
    binding_pos: Vec<Option<usize>>,
    lu: Option<LuFactors>,
    /// Value of the basic variable of each tableau row.
    row_value: Vec<f64>,
    /// Simplex multipliers on the binding rows.
    duals: Vec<f64>,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a StandardLp, domain: VariableDomain) -> Self {
        let d = lp.num_vars();
        let k = lp.num_constraints();
        let n_struct = match domain {
            VariableDomain::Free => 2 * d,
            VariableDomain::NonNegative => d,
        };
        let mut is_basic = vec![false; n_struct + k];
        for b in is_basic.iter_mut().skip(n_struct) {
            *b = true;
        }
        Self { lp, d, k, n_struct, row_basic: (n_struct..n_struct + k).collect(), is_basic, rhs: lp.c.to_vec() }
    }

    #[inline]
    fn structural(&self, var: usize) -> (usize, f64) {
        if var < self.d {
            (var, 1.0)
        } else {
            (var - self.d, -1.0)
        }
    }

    #[inline]
    fn a(&self, row: usize, col: usize) -> f64 {
        self.lp.a.get(row, col)
    }

    fn view(&self) -> Result<BasisView, LpError> {
        let mut structural = Vec::new();
        let mut binding_mask = vec![true; self.k];
        for (row, &var) in self.row_basic.iter().enumerate() {
            if var < self.n_struct {
                let (i, s) = self.structural(var);
                structural.push((i, s, row));
            } else {
                binding_mask[var - self.n_struct] = false;
            }
        }
        let binding: Vec<usize> = (0..self.k).filter(|&r| binding_mask[r]).collect();
        let mut binding_pos = vec![None; self.k];
        for (p, &r) in binding.iter().enumerate() {
            binding_pos[r] = Some(p);
        }
        let m = binding.len();
        debug_assert_eq!(m, structural.len());

        let (lu, z, duals) = if m == 0 {
            (None, Vec::new(), Vec::new())
        } else {
            let mut block = Vec::with_capacity(m * m);
            for &row in &binding {
                block.extend(structural.iter().map(|&(i, s, _)| s * self.a(row, i)));
            }
            let lu = lu_factor(&DenseMatrix::new(m, m, block)?)?;
            let c_j: Vec<f64> = binding.iter().map(|&row| self.rhs[row]).collect();
            let r_b: Vec<f64> = structural.iter().map(|&(i, s, _)| s * self.lp.r[i]).collect();
            let z = lu.solve(&c_j);
            let y = lu.solve_transpose(&r_b);
            (Some(lu), z, y)
        };

        let mut row_value = vec![0.0; self.k];
        for (q, &(_, _, row)) in structural.iter().enumerate() {
            row_value[row] = z[q];
        }
        for (row, &var) in self.row_basic.iter().enumerate() {
            if var >= self.n_struct {
                let kk = var - self.n_struct;
                let used: f64 = structural.iter().zip(&z).map(|(&(i, s, _), zq)| s * self.a(kk, i) * zq).sum();
                row_value[row] = self.rhs[kk] - used;
            }
        }
        Ok(BasisView { structural, binding, binding_pos, lu, row_value, duals })
    }

    /// Reduced cost of `var` and the magnitude of the terms it was summed
    /// from, which scales its round-off.
    fn reduced_cost(&self, view: &BasisView, var: usize) -> (f64, f64) {
        if var < self.n_struct {
            let (i, s) = self.structural(var);
            let (priced, scale) = view.binding.iter().zip(&view.duals).fold((0.0, 0.0), |(p, m), (&row, y)| {
                let t = y * self.a(row, i);
                (p + t, m + t.abs())
            });
            (s * (self.lp.r[i] - priced), 1.0 + self.lp.r[i].abs() + scale)
        } else {
            let row = var - self.n_struct;
            (view.binding_pos[row].map_or(0.0, |p| -view.duals[p]), 1.0)
        }
    }

    fn entering(&self, view: &BasisView, rule: Rule, rejected: &[usize]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for var in 0..self.n_struct + self.k {
            if self.is_basic[var] || rejected.contains(&var) {
                continue;
            }
            let (sigma, scale) = self.reduced_cost(view, var);
            if sigma <= PIVOT_TOL * scale {
                continue;
            }
            match rule {
                Rule::Bland => return Some((var, sigma)),
                Rule::Dantzig => {
                    if best.is_none_or(|(_, b)| sigma > b) {
                        best = Some((var, sigma));
                    }
                }
            }
        }
        best
    }

    /// Rate of decrease of each row's basic variable per unit of `entering`.
    fn direction(&self, view: &BasisView, entering: usize) -> Vec<f64> {
        let m = view.binding.len();
        let (col_j, entering_col): (Vec<f64>, Option<(usize, f64)>) = if entering < self.n_struct {
            let (i, s) = self.structural(entering);
            (view.binding.iter().map(|&row| s * self.a(row, i)).collect(), Some((i, s)))
        } else {
            let row = entering - self.n_struct;
            let mut e = vec![0.0; m];
            e[view.binding_pos[row].expect("nonbasic slack lies on a binding row")] = 1.0;
            (e, None)
        };
        let dz = match &view.lu {
            Some(lu) => lu.solve(&col_j),
            None => Vec::new(),
        };
        let mut alpha = vec![0.0; self.k];
        for (q, &(_, _, row)) in view.structural.iter().enumerate() {
            alpha[row] = dz[q];
        }
        for (row, &var) in self.row_basic.iter().enumerate() {
            if var >= self.n_struct {
                let kk = var - self.n_struct;
                let direct = entering_col.map_or(0.0, |(i, s)| s * self.a(kk, i));
                let via_basis: f64 =
                    view.structural.iter().zip(&dz).map(|(&(i, s, _), d)| s * self.a(kk, i) * d).sum();
                alpha[row] = direct - via_basis;
            }
        }
        alpha
    }

    /// Ratio test. Bland takes the exact minimum ratio, ties to the smallest
    /// basic variable. Dantzig uses the two-pass Harris test: among rows whose
    /// ratio is within [`FEAS_TOL`] of the minimum, the largest pivot wins,
    /// ties to the smallest row.
    fn leaving(&self, view: &BasisView, alpha: &[f64], rule: Rule) -> Option<(usize, f64)> {
        let ratio = |row: usize| view.row_value[row].max(0.0) / alpha[row];
        let eligible = || alpha.iter().enumerate().filter(|&(_, &a)| a > PIVOT_TOL).map(|(row, _)| row);
        match rule {
            Rule::Bland => {
                let mut best: Option<(usize, f64)> = None;
                for row in eligible() {
                    let theta = ratio(row);
                    best = match best {
                        None => Some((row, theta)),
                        Some((brow, btheta)) => {
                            let tie = (theta - btheta).abs() <= 1e-12 * (1.0 + btheta.abs());
                            if (!tie && theta < btheta) || (tie && self.row_basic[row] < self.row_basic[brow]) {
                                Some((row, theta))
                            } else {
                                Some((brow, btheta))
                            }
                        }
                    };
                }
                best
            }
            Rule::Dantzig => {
                let bound = eligible()
                    .map(|row| (view.row_value[row].max(0.0) + FEAS_TOL) / alpha[row])
                    .fold(f64::INFINITY, f64::min);
                let mut best: Option<usize> = None;
                for row in eligible() {
                    if ratio(row) <= bound && best.is_none_or(|b| alpha[row] > alpha[b]) {
                        best = Some(row);
                    }
                }
                best.map(|row| (row, ratio(row)))
            }
        }
    }

    fn finish(&self, view: &BasisView, status: LpStatus, pivots: usize) -> LpSolution {
        let mut x = vec![0.0; self.d];
        let mut vars = Vec::with_capacity(view.structural.len());
        for &(i, s, row) in &view.structural {
            x[i] += s * view.row_value[row];
            vars.push(i);
        }
        vars.sort_unstable();
        vars.dedup();
        let mut rows = view.binding.clone();
        rows.truncate(vars.len());
        let x = DenseVector::from_vec_unchecked(x);
        LpSolution {
            objective: self.lp.objective(&x),
            x,
            basis: Basis { vars, rows },
            status,
            pivots,
        }
    }

    /// Optimizes against a perturbed right-hand side, then restores `c` and
    /// continues from the basis reached. The perturbation separates
    /// degenerate vertices so Dantzig steps make strict progress; the second
    /// pass usually stops at once because reduced costs do not depend on `c`.
    fn run(mut self) -> Result<LpSolution, LpError> {
        let limit = 50 * (self.k + 2 * self.d);
        let mut pivots = 0;
        self.rhs = self.lp.c.iter().enumerate().map(|(k, c)| c + PERTURBATION * (1.0 + c) * jitter(k)).collect();
        let first = self.iterate(limit, &mut pivots)?;
        self.rhs = self.lp.c.to_vec();
        if first == LpStatus::Unbounded {
            let view = self.view()?;
            return Ok(self.finish(&view, LpStatus::Unbounded, pivots));
        }
        let status = self.iterate(limit, &mut pivots)?;
        let view = self.view()?;
        Ok(self.finish(&view, status, pivots))
    }

    fn iterate(&mut self, limit: usize, pivots: &mut usize) -> Result<LpStatus, LpError> {
        let degenerate_switch = self.k + 2 * self.d;
        let mut degenerate_run = 0;
        // A pivot whose new basis fails to factor is undone and its entering
        // variable skipped until the next successful pivot.
        let mut rejected: Vec<usize> = Vec::new();
        let mut last: Option<(usize, usize, usize)> = None;
        loop {
            let view = match self.view() {
                Ok(view) => {
                    if last.take().is_some() {
                        rejected.clear();
                    }
                    view
                }
                Err(LpError::Linalg(LinalgError::SingularMatrix)) if last.is_some() => {
                    let (row, entering, leaving) = last.take().expect("checked");
                    self.is_basic[entering] = false;
                    self.is_basic[leaving] = true;
                    self.row_basic[row] = leaving;
                    rejected.push(entering);
                    continue;
                }
                Err(e) => return Err(e),
            };
            let rule = if degenerate_run >= degenerate_switch { Rule::Bland } else { Rule::Dantzig };
            let Some((entering, sigma)) = self.entering(&view, rule, &rejected) else {
                if !rejected.is_empty() {
                    return Err(LinalgError::SingularMatrix.into());
                }
                return Ok(LpStatus::Optimal);
            };
            let alpha = self.direction(&view, entering);
            let Some((row, theta)) = self.leaving(&view, &alpha, rule) else {
                return Ok(LpStatus::Unbounded);
            };
            if *pivots >= limit {
                return Err(LpError::CycleLimitExceeded { limit });
            }
            let leaving = self.row_basic[row];
            self.is_basic[leaving] = false;
            self.is_basic[entering] = true;
            self.row_basic[row] = entering;
            last = Some((row, entering, leaving));
            *pivots += 1;
            let objective: f64 = view.duals.iter().zip(&view.binding).map(|(y, &row)| y * self.rhs[row]).sum();
            if theta <= PIVOT_TOL || sigma * theta <= PIVOT_TOL * (1.0 + objective.abs()) {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
        }
    }
}

/// Vertex of the basis: `x[I] = A[J, I]⁻¹ c[J]`, zero elsewhere.
///
/// Makes no claim about the constraints outside `J`.
pub fn basic_solution(lp: &StandardLp, basis: &Basis) -> Result<DenseVector, LpError> {
    let mut x = vec![0.0; lp.num_vars()];
    if !basis.is_empty() {
        let block = basis.submatrix(lp)?;
        let c_j: Vec<f64> = basis.rows.iter().map(|&k| lp.c[k]).collect();
        let x_i = lu_solve(&block, &c_j)?;
        for (&i, v) in basis.vars.iter().zip(x_i.iter()) {
            x[i] = *v;
        }
    }
    Ok(DenseVector::from_vec_unchecked(x))
}

/// Complementary dual: `y[J] = A[J, I]⁻ᵀ r[I]`, zero elsewhere.
pub fn dual_solution(lp: &StandardLp, basis: &Basis) -> Result<DenseVector, LpError> {
    let mut y = vec![0.0; lp.num_constraints()];
    if !basis.is_empty() {
        let block = basis.submatrix(lp)?;
        let r_i: Vec<f64> = basis.vars.iter().map(|&i| lp.r[i]).collect();
        let y_j = lu_solve(&block.transpose(), &r_i)?;
        for (&k, v) in basis.rows.iter().zip(y_j.iter()) {
            y[k] = *v;
        }
    }
    Ok(DenseVector::from_vec_unchecked(y))
}

/// Largest constraint violation `max_k [A[k,:]·x − c[k]]⁺`; zero iff feasible.
pub fn check_feasibility(lp: &StandardLp, x: &[f64]) -> f64 {
    assert_eq!(x.len(), lp.num_vars(), "solution length");
    (0..lp.num_constraints()).map(|k| dot(lp.a.row(k), x) - lp.c[k]).fold(0.0, f64::max)
}
