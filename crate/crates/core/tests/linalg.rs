mod common;

use proptest::prelude::*;
use rand::Rng;
use resolve_rl::linalg::{lu_solve, min_abs_eigenvalue, vector_norm, DenseMatrix, LinalgError, NormKind};

fn inf_norm(v: &[f64]) -> f64 {
    vector_norm(v, NormKind::Inf)
}

#[test]
fn hilbert_solve_recovers_ones() {
    let h: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| 1.0 / (i + j + 1) as f64).collect()).collect();
    let b: Vec<f64> = h.iter().map(|row| row.iter().sum()).collect();
    let x = lu_solve(&DenseMatrix::from_rows(&h).unwrap(), &b).unwrap();
    for v in x.iter() {
        assert!((v - 1.0).abs() < 1e-8);
    }
}

#[test]
fn trivial_solves() {
    let x = lu_solve(&DenseMatrix::identity(2), &[3.0, -7.0]).unwrap();
    assert_eq!(x.as_slice(), &[3.0, -7.0]);
    let x = lu_solve(&DenseMatrix::diag(&[2.0, 4.0]).unwrap(), &[2.0, 4.0]).unwrap();
    assert_eq!(x.as_slice(), &[1.0, 1.0]);
}

#[test]
fn singular_matrix_is_rejected() {
    let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
    assert!(matches!(lu_solve(&a, &[1.0, 1.0]), Err(LinalgError::SingularMatrix)));
}

#[test]
fn solve_matches_complete_pivoting_oracle() {
    let mut rng = common::rng(11);
    for _ in 0..200 {
        let n = rng.gen_range(1..=8);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let Some(expected) = common::gauss_solve(&rows, &b) else { continue };
        let got = lu_solve(&DenseMatrix::from_rows(&rows).unwrap(), &b).unwrap();
        let scale = 1.0 + inf_norm(&expected);
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-8 * scale, "{g} vs {e}");
        }
    }
}

#[test]
fn eigenvalue_examples() {
    assert!((min_abs_eigenvalue(&DenseMatrix::identity(3)).unwrap() - 1.0).abs() < 1e-12);
    assert!((min_abs_eigenvalue(&DenseMatrix::diag(&[2.0, -3.0, 5.0]).unwrap()).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn eigenvalues_match_characteristic_polynomial_roots() {
    let mut rng = common::rng(4);
    for _ in 0..20 {
        let rows: Vec<Vec<f64>> = (0..4).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let expected = common::poly_roots(&common::char_poly(&rows)).iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        let got = min_abs_eigenvalue(&DenseMatrix::from_rows(&rows).unwrap()).unwrap();
        assert!((got - expected).abs() < 1e-6, "{got} vs {expected}");
    }
}

#[test]
fn norm_examples() {
    assert_eq!(vector_norm(&[3.0, -4.0], NormKind::Two), 5.0);
    let a = DenseMatrix::from_rows(&[vec![1.0, -2.0], vec![3.0, 4.0]]).unwrap();
    assert_eq!(a.norm(NormKind::Inf).unwrap(), 7.0);
    assert_eq!(a.norm(NormKind::One).unwrap(), 6.0);
    assert!(matches!(a.norm(NormKind::Two), Err(LinalgError::UnsupportedKind(_))));
}

fn square(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, n), n)
}

proptest! {
    #[test]
    fn residual_is_small(rows in (1usize..7).prop_flat_map(square), seed in any::<u64>()) {
        let n = rows.len();
        let mut rng = common::rng(seed);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let a = DenseMatrix::from_rows(&rows).unwrap();
        if let Ok(x) = lu_solve(&a, &b) {
            let ax = a.mul_vec(&x).unwrap();
            let res = ax.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            prop_assert!(res <= 1e-9 * (1.0 + a.norm(NormKind::Inf).unwrap() * inf_norm(&x)));
        }
    }

    #[test]
    fn identity_solve_is_exact(b in prop::collection::vec(-1e6f64..1e6, 1..10)) {
        let x = lu_solve(&DenseMatrix::identity(b.len()), &b).unwrap();
        prop_assert_eq!(x.as_slice(), b.as_slice());
    }

    #[test]
    fn eigenvalue_modulus_is_homogeneous(rows in (1usize..6).prop_flat_map(square), c in -4.0f64..4.0) {
        prop_assume!(c.abs() > 1e-3);
        let a = DenseMatrix::from_rows(&rows).unwrap();
        let base = min_abs_eigenvalue(&a).unwrap();
        let scaled = min_abs_eigenvalue(&a.scale(c)).unwrap();
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-8 * (1.0 + c.abs() * base));
    }

    #[test]
    fn norms_are_homogeneous_and_subadditive(
        u in prop::collection::vec(-10.0f64..10.0, 5),
        v in prop::collection::vec(-10.0f64..10.0, 5),
        t in -3.0f64..3.0,
    ) {
        for kind in [NormKind::One, NormKind::Two, NormKind::Inf] {
            let sum: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
            let scaled: Vec<f64> = u.iter().map(|a| t * a).collect();
            prop_assert!(vector_norm(&sum, kind) <= vector_norm(&u, kind) + vector_norm(&v, kind) + 1e-12);
            prop_assert!((vector_norm(&scaled, kind) - t.abs() * vector_norm(&u, kind)).abs() <= 1e-10);
        }
    }
}
