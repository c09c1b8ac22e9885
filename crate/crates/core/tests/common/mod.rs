//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use itertools::Itertools;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resolve_rl::lp::StandardLp;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian elimination with complete pivoting. `None` when a pivot is
/// below `1e-12` of the largest entry.
pub fn gauss_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(row, &bi)| row.iter().copied().chain([bi]).collect()).collect();
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let mut col_of: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut pi, mut pj, mut best) = (k, k, 0.0);
        for i in k..n {
            for j in k..n {
                if m[i][j].abs() > best {
                    (pi, pj, best) = (i, j, m[i][j].abs());
                }
            }
        }
        if best < 1e-12 * scale {
            return None;
        }
        m.swap(k, pi);
        for row in m.iter_mut() {
            row.swap(k, pj);
        }
        col_of.swap(k, pj);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..=n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    let mut z = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[k][j] * z[j]).sum();
        z[k] = (m[k][n] - s) / m[k][k];
    }
    let mut x = vec![0.0; n];
    for (k, &c) in col_of.iter().enumerate() {
        x[c] = z[k];
    }
    Some(x)
}

pub fn rank(rows: &[Vec<f64>]) -> usize {
    let mut m = rows.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let scale = m.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())) else { break };
        if m[p][c].abs() < 1e-10 * scale {
            continue;
        }
        m.swap(r, p);
        for i in 0..m.len() {
            if i != r {
                let f = m[i][c] / m[r][c];
                for j in c..cols {
                    m[i][j] -= f * m[r][j];
                }
            }
        }
        r += 1;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Oracle {
    Bounded(f64),
    Unbounded,
}

fn rows_of(lp: &StandardLp) -> Vec<Vec<f64>> {
    lp.a().to_rows()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Basic solution of `(I, J)` if the block is nonsingular.
pub fn vertex(lp: &StandardLp, vars: &[usize], rows: &[usize]) -> Option<Vec<f64>> {
    let a = rows_of(lp);
    let block: Vec<Vec<f64>> = rows.iter().map(|&k| vars.iter().map(|&i| a[k][i]).collect()).collect();
    let rhs: Vec<f64> = rows.iter().map(|&k| lp.c()[k]).collect();
    let z = if vars.is_empty() { Vec::new() } else { gauss_solve(&block, &rhs)? };
    let mut x = vec![0.0; lp.num_vars()];
    for (&i, v) in vars.iter().zip(z) {
        x[i] = v;
    }
    Some(x)
}

pub fn violation(lp: &StandardLp, x: &[f64]) -> f64 {
    let a = rows_of(lp);
    a.iter().zip(lp.c().iter()).map(|(row, c)| dot(row, x) - c).fold(0.0, f64::max)
}

/// Whether `r` is a nonnegative combination of rows of `a`. By Carathéodory
/// it suffices to try every linearly independent row subset of size
/// `rank(a)`, solving on a nonsingular column minor and checking the rest.
fn cone_contains(a: &[Vec<f64>], r: &[f64]) -> bool {
    let d = r.len();
    let rk = rank(a);
    if rk == 0 {
        return r.iter().all(|&v| v.abs() <= 1e-12);
    }
    for rows in (0..a.len()).combinations(rk) {
        let block: Vec<Vec<f64>> = rows.iter().map(|&j| a[j].clone()).collect();
        if rank(&block) < rk {
            continue;
        }
        for cols in (0..d).combinations(rk) {
            let minor: Vec<Vec<f64>> = cols.iter().map(|&i| block.iter().map(|row| row[i]).collect()).collect();
            let rhs: Vec<f64> = cols.iter().map(|&i| r[i]).collect();
            let Some(y) = gauss_solve(&minor, &rhs) else {
                continue;
            };
            let residual = (0..d)
                .map(|i| (block.iter().zip(&y).map(|(row, yj)| row[i] * yj).sum::<f64>() - r[i]).abs())
                .fold(0.0, f64::max);
            let scale = 1.0 + r.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if residual <= 1e-9 * scale && y.iter().all(|&v| v >= -1e-12) {
                return true;
            }
            break;
        }
    }
    false
}

/// Optimum of `max rᵀx s.t. Ax ≤ c` with free `x` and `c ≥ 0`, by
/// enumerating bases. Bounded exactly when `r` lies in the cone of the rows
/// of `A`; the optimum is then the best feasible basic solution, with the
/// origin included.
pub fn brute_force(lp: &StandardLp) -> Oracle {
    let d = lp.num_vars();
    let k = lp.num_constraints();
    let a = rows_of(lp);
    let r = lp.r().as_slice().to_vec();
    let tol = 1e-9;

    if !cone_contains(&a, &r) {
        return Oracle::Unbounded;
    }
    let mut best = 0.0f64;
    for m in 1..=d.min(k) {
        for vars in (0..d).combinations(m) {
            for rows in (0..k).combinations(m) {
                if let Some(x) = vertex(lp, &vars, &rows) {
                    if violation(lp, &x) <= tol * (1.0 + x.iter().map(|v| v.abs()).sum::<f64>()) {
                        best = best.max(dot(&r, &x));
                    }
                }
            }
        }
    }
    Oracle::Bounded(best)
}

/// Random LP with `c > 0`. Every fourth instance uses small integer entries
/// so that degenerate vertices and ties occur.
pub fn random_lp(rng: &mut ChaCha8Rng, index: usize) -> StandardLp {
    let d = rng.gen_range(1..=6);
    let k = rng.gen_range(1..=12);
    let integer = index % 4 == 3;
    let entry = |rng: &mut ChaCha8Rng| {
        if integer {
            rng.gen_range(-2i32..=2) as f64
        } else {
            rng.gen_range(-1.0..1.0)
        }
    };
    let r: Vec<f64> = (0..d).map(|_| entry(rng)).collect();
    let a: Vec<Vec<f64>> = (0..k).map(|_| (0..d).map(|_| entry(rng)).collect()).collect();
    let c: Vec<f64> = (0..k).map(|_| if integer { rng.gen_range(1..=3) as f64 } else { rng.gen_range(0.1..1.0) }).collect();
    StandardLp::from_parts(r, a, c).unwrap()
}

/// Random bounded LP with `k ≥ d`: the objective is a positive combination
/// of `d` rows, which certifies boundedness.
pub fn random_bounded_lp(rng: &mut ChaCha8Rng, d: usize, k: usize) -> StandardLp {
    let a: Vec<Vec<f64>> = (0..k).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let mut r = vec![0.0; d];
    for row in a.iter().take(d) {
        let w: f64 = rng.gen_range(0.2..1.0);
        for (ri, v) in r.iter_mut().zip(row) {
            *ri += w * v;
        }
    }
    let c: Vec<f64> = (0..k).map(|_| rng.gen_range(0.2..1.0)).collect();
    StandardLp::from_parts(r, a, c).unwrap()
}

/// Coefficients of `det(λI − A)`, highest degree first, by Faddeev–LeVerrier.
pub fn char_poly(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mul = |x: &[Vec<f64>], y: &[Vec<f64>]| -> Vec<Vec<f64>> {
        (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| x[i][k] * y[k][j]).sum()).collect()).collect()
    };
    let mut coeffs = vec![1.0];
    let mut m = vec![vec![0.0; n]; n];
    for k in 1..=n {
        let mut next = mul(a, &m);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += coeffs[k - 1];
        }
        m = next;
        let am = mul(a, &m);
        let trace: f64 = (0..n).map(|i| am[i][i]).sum();
        coeffs.push(-trace / k as f64);
    }
    coeffs
}

/// All roots of a monic polynomial by Durand–Kerner iteration.
pub fn poly_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let eval = |z: Complex64| coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
    let seed = Complex64::new(0.4, 0.9);
    let bound = 1.0 + coeffs[1..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut roots: Vec<Complex64> = (0..n).map(|i| seed.powu(i as u32) * bound).collect();
    for _ in 0..5000 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let denom = (0..n).filter(|&j| j != i).fold(Complex64::new(1.0, 0.0), |acc, j| acc * (roots[i] - roots[j]));
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    roots
}
