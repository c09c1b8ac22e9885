mod common;

use common::Oracle;
use proptest::prelude::*;
use rand::Rng;
use resolve_rl::alp::{build_exact_lp, grid_constraints, StateRelevance};
use resolve_rl::basis::{
    basis_sigma, gap_report, identify_basis_elimination, identify_basis_elimination_with_threshold,
    identify_basis_simplex, verify_basis_optimality, BasisVerdict,
};
use resolve_rl::experiment::{stochastic_instance, TabularInstance};
use resolve_rl::linalg::dot;
use resolve_rl::lp::{basic_solution, simplex_solve, Basis, StandardLp};
use resolve_rl::mdp::{FeatureTable, TabularMdp};
use resolve_rl::par::Execution;

fn random_tabular(seed: u64) -> StandardLp {
    let mut rng = common::rng(seed);
    let (n, m) = (3, 2);
    let transitions: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| {
                    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
                    let total: f64 = w.iter().sum();
                    w.iter().map(|v| v / total).collect()
                })
                .collect()
        })
        .collect();
    let costs: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
    let model = TabularMdp::new(transitions, costs, 0.9).unwrap();
    let table = FeatureTable::identity(n).unwrap();
    let cons = grid_constraints(n, m).unwrap();
    build_exact_lp(&model, &table, &cons, &StateRelevance::uniform(n).unwrap(), Execution::Sequential).unwrap()
}

#[test]
fn simplex_basis_attains_enumerated_optimum() {
    let inst = stochastic_instance();
    let basis = identify_basis_simplex(&inst.lp_exact).unwrap();
    let x = basic_solution(&inst.lp_exact, &basis).unwrap();
    let Oracle::Bounded(v) = common::brute_force(&inst.lp_exact) else { panic!("bounded LP") };
    assert!((dot(inst.lp_exact.r(), &x) - v).abs() < 1e-9);
    assert!(basis.size() <= inst.lp_exact.num_vars());
}

#[test]
fn zero_weight_slack_variable_is_eliminated() {
    // x₂ has no objective weight and its constraints never bind at the optimum.
    let lp = StandardLp::from_parts(vec![1.0, 0.0], vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]], vec![1.0, 1.0, 3.0])
        .unwrap();
    let basis = identify_basis_elimination_with_threshold(&lp, 1e-6).unwrap();
    assert!(!basis.vars().contains(&1));
    assert_eq!(basis.vars(), &[0]);
    assert_eq!(basis.rows(), &[0]);

    let full = simplex_solve(&lp).unwrap().objective;
    let without = simplex_solve(&StandardLp::from_parts(vec![1.0], vec![vec![1.0], vec![0.0], vec![1.0]], vec![1.0, 1.0, 3.0]).unwrap())
        .unwrap()
        .objective;
    assert_eq!(full, without);
}

#[test]
fn huge_threshold_eliminates_everything() {
    let lp = random_tabular(1);
    assert!(identify_basis_elimination_with_threshold(&lp, 1e9).unwrap().is_empty());
    assert!(identify_basis_elimination(&lp, 1, 1e-300).unwrap().is_empty());
}

#[test]
fn gap_report_single_variable_example() {
    let lp = StandardLp::from_parts(vec![1.0], vec![vec![1.0], vec![1.0]], vec![1.0, 2.0]).unwrap();
    let g = gap_report(&lp).unwrap();
    assert_eq!(g.delta1, Some(1.0));
    assert_eq!(g.delta, g.delta1.unwrap().min(g.delta2.unwrap_or(f64::INFINITY)));
    assert_eq!(
        verify_basis_optimality(&lp, &Basis::new(vec![0], vec![1]).unwrap()).unwrap(),
        BasisVerdict::Infeasible(1.0)
    );
}

#[test]
fn suboptimal_basis_gap_matches_enumeration() {
    let lp = StandardLp::from_parts(vec![2.0, 3.0], vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]], vec![4.0, 6.0, 8.0])
        .unwrap();
    let basis = Basis::new(vec![0, 1], vec![0, 2]).unwrap();
    let x = common::vertex(&lp, &[0, 1], &[0, 2]).unwrap();
    assert_eq!(common::violation(&lp, &x), 0.0);
    let expected = 22.0 - dot(lp.r(), &x);
    match verify_basis_optimality(&lp, &basis).unwrap() {
        BasisVerdict::Suboptimal(gap) => assert!((gap - expected).abs() < 1e-12),
        other => panic!("{other:?}"),
    }
}

#[test]
fn simplex_basis_is_optimal_verdict() {
    for seed in 0..20 {
        let lp = random_tabular(seed);
        let basis = identify_basis_simplex(&lp).unwrap();
        assert_eq!(verify_basis_optimality(&lp, &basis).unwrap(), BasisVerdict::Optimal);
        assert!(basis_sigma(&lp, &basis).unwrap() > 0.0);
    }
}

#[test]
fn identification_methods_agree_on_noiseless_instances() {
    for seed in 0..30 {
        let lp = random_tabular(seed);
        let a = identify_basis_simplex(&lp).unwrap();
        let b = identify_basis_elimination_with_threshold(&lp, 1e-7).unwrap();
        let va = dot(lp.r(), &basic_solution(&lp, &a).unwrap());
        let vb = dot(lp.r(), &basic_solution(&lp, &b).unwrap());
        assert!((va - vb).abs() < 1e-9, "seed {seed}: {va} vs {vb}");
    }
}

#[test]
fn instance_helper_is_consistent() {
    let inst: TabularInstance = stochastic_instance();
    assert_eq!(identify_basis_simplex(&inst.lp_exact).unwrap(), inst.basis);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gaps_are_positive_and_scale_with_rhs(seed in any::<u64>(), t in 0.1f64..10.0) {
        let mut rng = common::rng(seed);
        let lp = common::random_bounded_lp(&mut rng, 2, 5);
        let g = gap_report(&lp).unwrap();
        prop_assert!(g.delta1.is_none_or(|d| d > 0.0));
        prop_assert!(g.delta2.is_none_or(|d| d > 0.0));
        prop_assert_eq!(g.delta, g.delta1.unwrap_or(f64::INFINITY).min(g.delta2.unwrap_or(f64::INFINITY)));

        let scaled = gap_report(&lp.scale_rhs(t).unwrap()).unwrap();
        if let (Some(a), Some(b)) = (g.delta1, scaled.delta1) {
            prop_assert!((b - t * a).abs() <= 1e-9 * (1.0 + t * a));
        }
    }

    #[test]
    fn simplex_basis_never_exceeds_dimension(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let lp = common::random_lp(&mut rng, 1);
        if let Ok(b) = identify_basis_simplex(&lp) {
            prop_assert!(b.size() <= lp.num_vars());
        }
    }
}
