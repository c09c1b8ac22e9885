use proptest::prelude::*;
use resolve_rl::alp::{
    build_estimated_lp, build_exact_lp, constraint_sample_size, estimate_row, grid_constraints, rad, sample_constraints,
    AlpError, SampleStore, StateRelevance,
};
use resolve_rl::experiment::{stochastic_instance, ExperimentConfig};
use resolve_rl::linalg::DenseMatrix;
use resolve_rl::mdp::{FeatureMap, FeatureTable, GenerativeModel, TabularMdp};
use resolve_rl::par::Execution;
use resolve_rl::rng::stream;

fn two_state() -> (TabularMdp, FeatureTable) {
    let p = vec![vec![vec![0.3, 0.7], vec![0.9, 0.1]], vec![vec![0.5, 0.5], vec![0.2, 0.8]]];
    let model = TabularMdp::new(p, vec![vec![0.2, 0.6], vec![1.0, 0.0]], 0.9).unwrap();
    let phi = FeatureTable::new(DenseMatrix::from_rows(&[vec![1.0, 0.5], vec![0.2, 1.0]]).unwrap()).unwrap();
    (model, phi)
}

/// `φ(s) − γ·Σ P(s′|s,a)·φ(s′)` from the raw tables.
fn hand_row(model: &TabularMdp, phi: &FeatureTable, s: usize, a: usize) -> Vec<f64> {
    (0..phi.dim())
        .map(|i| phi.row(s)[i] - 0.9 * (0..2).map(|n| model.probability(s, a, n) * phi.row(n)[i]).sum::<f64>())
        .collect()
}

#[test]
fn rad_examples() {
    assert_eq!(rad(17, 2.0), 0.0);
    assert!((rad(1, 2.0 / std::f64::consts::E.powi(2)) - 1.0).abs() < 1e-12);
    assert!((rad(50, 0.02) - (100f64.ln() / 100.0).sqrt()).abs() < 1e-15);
    assert!((rad(50, 0.02) - 0.21460).abs() < 1e-5);
}

#[test]
fn constraint_sample_size_examples() {
    let e = 1.0 / std::f64::consts::E;
    assert_eq!(constraint_sample_size(e, e), 3);
    assert_eq!(constraint_sample_size(0.1, 0.1), 54);
    let mut last = 0;
    for eps in [0.9, 0.5, 0.2, 0.1, 0.05, 0.01] {
        let k = constraint_sample_size(eps, 0.1);
        assert!(k >= last);
        last = k;
    }
}

#[test]
fn estimate_row_examples() {
    let phi = FeatureTable::new(DenseMatrix::from_rows(&[vec![0.5], vec![1.0]]).unwrap()).unwrap();
    let row = estimate_row(&phi, 0, &[1, 1, 1], 0.9).unwrap();
    // Rows are stored as φ(s) − γ·mean φ(s′), the negation of 0.9 − 0.5.
    assert!((row[0] + 0.4).abs() < 1e-12);
    let row = estimate_row(&phi, 0, &[1, 0], 0.0).unwrap();
    assert_eq!(row[0], 0.5);
    assert_eq!(estimate_row(&phi, 0, &[], 0.9), Err(AlpError::EmptySamples));
}

#[test]
fn exact_lp_matches_hand_built_rows() {
    let (model, phi) = two_state();
    let cons = grid_constraints(2, 2).unwrap();
    let lp = build_exact_lp(&model, &phi, &cons, &StateRelevance::uniform(2).unwrap(), Execution::Sequential).unwrap();
    for (k, &(s, a)) in cons.pairs().iter().enumerate() {
        for (got, want) in lp.a().row(k).iter().zip(hand_row(&model, &phi, s, a)) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(lp.c()[k], model.cost(s, a));
    }
}

#[test]
fn single_atom_relevance_gives_that_feature_row() {
    let (model, phi) = two_state();
    let cons = grid_constraints(2, 2).unwrap();
    let mu = StateRelevance::new(vec![(1, 1.0)]).unwrap();
    let lp = build_exact_lp(&model, &phi, &cons, &mu, Execution::Sequential).unwrap();
    assert_eq!(lp.r().as_slice(), phi.row(1));
}

#[test]
fn estimated_lp_requires_samples_for_every_pair() {
    let (model, phi) = two_state();
    let cons = grid_constraints(2, 2).unwrap();
    let mut store = SampleStore::new();
    store.push((0, 0), 1);
    let err = build_estimated_lp(&model, &phi, &cons, &store, &StateRelevance::uniform(2).unwrap()).unwrap_err();
    assert!(matches!(err, AlpError::MissingSamples(ref v) if v.len() == 3));
}

#[test]
fn size_one_estimates_are_unbiased() {
    let (model, phi) = two_state();
    let draws = 10_000;
    for (s, a) in [(0, 0), (1, 1)] {
        let exact = hand_row(&model, &phi, s, a);
        let mut sum = [0.0; 2];
        let mut sq = [0.0; 2];
        for t in 0..draws {
            let mut rng = stream(3, &[s as u64, a as u64, t]);
            let next = model.sample_next(s, a, &mut rng);
            let row = estimate_row(&phi, s, &[next], 0.9).unwrap();
            for i in 0..2 {
                sum[i] += row[i];
                sq[i] += row[i] * row[i];
            }
        }
        for i in 0..2 {
            let mean = sum[i] / draws as f64;
            let sd = (sq[i] / draws as f64 - mean * mean).max(0.0).sqrt();
            let se = sd / (draws as f64).sqrt();
            assert!((mean - exact[i]).abs() < 4.0 * se.max(1e-12), "({s},{a}) entry {i}: {mean} vs {}", exact[i]);
        }
    }
}

#[test]
fn mixed_samples_concentrate_within_three_radii() {
    let (model, phi) = two_state();
    let n = 10_000;
    let mut rng = stream(8, &[]);
    let samples: Vec<usize> = (0..n).map(|_| model.sample_next(0, 1, &mut rng)).collect();
    let row = estimate_row(&phi, 0, &samples, 0.9).unwrap();
    let exact = hand_row(&model, &phi, 0, 1);
    for (g, e) in row.iter().zip(&exact) {
        assert!((g - e).abs() <= 3.0 * rad(n, 0.01));
    }
}

#[test]
fn hoeffding_event_holds_often_enough() {
    let inst = stochastic_instance();
    let (n, eps) = (50, 0.001);
    let d1 = inst.features.dim();
    let k = inst.constraints.len();
    let trials = 200;
    let mut good = 0;
    for t in 0..trials {
        let store = SampleStore::draw(&inst.model, inst.constraints.pairs(), n, t, &[1], Execution::Sequential);
        let est = build_estimated_lp(&inst.model, &inst.features, &inst.constraints, &store, &inst.relevance).unwrap();
        let worst = est.a().as_slice().iter().zip(inst.lp_exact.a().as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if worst <= rad(n, eps) {
            good += 1;
        }
    }
    let floor = 1.0 - eps * (d1 * k) as f64;
    assert!(good as f64 / trials as f64 >= floor, "{good}/{trials} below {floor}");
}

#[test]
fn constraint_sampling_examples() {
    let mut rng = stream(1, &[]);
    let all = sample_constraints(3, 2, 6, &mut rng).unwrap();
    let mut pairs = all.pairs().to_vec();
    pairs.sort_unstable();
    assert_eq!(pairs, grid_constraints(3, 2).unwrap().pairs());
    assert_eq!(sample_constraints(3, 2, 0, &mut rng), Err(AlpError::EmptyConstraintSet));
    assert!(matches!(sample_constraints(3, 2, 7, &mut rng), Err(AlpError::ExhaustedSpace { .. })));
    let a = sample_constraints(50, 4, 30, &mut stream(4, &[])).unwrap();
    let b = sample_constraints(50, 4, 30, &mut stream(4, &[])).unwrap();
    assert_eq!(a, b);
}

#[test]
fn grid_sizes() {
    assert_eq!(grid_constraints(40 * 60, 5).unwrap().len(), 12_000);
    assert_eq!(grid_constraints(1, 1).unwrap().len(), 1);
    assert_eq!(grid_constraints(2 * 3, 4).unwrap().len(), 24);
}

#[test]
fn full_mountain_car_lp_shape() {
    let cfg = ExperimentConfig::default().full_scale();
    let (model, table) = cfg.mountain_car().unwrap();
    let cons = grid_constraints(model.num_states(), model.num_actions()).unwrap();
    let store = SampleStore::draw(&model, cons.pairs(), 10, 0, &[1], Execution::default());
    assert_eq!(store.total(), 120_000);
    let lp = build_estimated_lp(&model, &table, &cons, &store, &StateRelevance::uniform(model.num_states()).unwrap()).unwrap();
    assert_eq!((lp.num_constraints(), lp.num_vars()), (12_000, 25));
    assert!(lp.c().iter().all(|&c| (0.0..=1.0).contains(&c)));
}

#[test]
fn store_round_trips_through_json_lines() {
    let inst = stochastic_instance();
    let store = SampleStore::draw(&inst.model, inst.constraints.pairs(), 3, 5, &[2], Execution::Sequential);
    let mut buf = Vec::new();
    store.write_jsonl(&mut buf).unwrap();
    let back = SampleStore::read_jsonl(std::io::Cursor::new(buf)).unwrap();
    assert_eq!(back, store);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn estimation_is_deterministic_and_execution_independent(seed in any::<u64>(), per_pair in 1usize..6) {
        let inst = stochastic_instance();
        let pairs = inst.constraints.pairs();
        let a = SampleStore::draw(&inst.model, pairs, per_pair, seed, &[1], Execution::Sequential);
        let b = SampleStore::draw(&inst.model, pairs, per_pair, seed, &[1], Execution::Parallel);
        prop_assert_eq!(&a, &b);
        let lp1 = build_estimated_lp(&inst.model, &inst.features, &inst.constraints, &a, &inst.relevance).unwrap();
        let lp2 = build_estimated_lp(&inst.model, &inst.features, &inst.constraints, &b, &inst.relevance).unwrap();
        prop_assert_eq!(lp1.clone(), lp2);
        prop_assert!(lp1.c().iter().all(|&c| (0.0..=1.0).contains(&c)));
    }
}
