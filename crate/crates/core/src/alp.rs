//! Approximate LPs built from a generative model.
//!
//! Row `(s, a)` of the constraint matrix is the Bellman inequality
//! `⟨φ(s) − γ·E[φ(s′)], w⟩ ≤ c(s, a)`, with the expectation replaced by a
//! sample mean in the estimated LP. The objective is `r = Σ_s μ(s)·φ(s)`, so
//! the LP variable is the weight vector `w` of `V ≈ Φw`.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{DenseMatrix, DenseVector};
use crate::lp::{Basis, LpError, StandardLp};
use crate::mdp::{ActionId, FeatureMap, GenerativeModel, StateId, TransitionOracle};
use crate::par::{map_indexed, Execution};
use crate::rng;

pub type Pair = (StateId, ActionId);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlpError {
    #[error("constraint set must contain at least one pair")]
    EmptyConstraintSet,
    #[error("duplicate constraint pair ({0}, {1})")]
    DuplicatePair(StateId, ActionId),
    #[error("pair ({0}, {1}) outside the state-action space")]
    PairOutOfRange(StateId, ActionId),
    #[error("requested {requested} distinct pairs but only {available} exist")]
    ExhaustedSpace { requested: usize, available: usize },
    #[error("no samples to average")]
    EmptySamples,
    #[error("{} constraint pairs have no samples, first ({}, {})", .0.len(), .0[0].0, .0[0].1)]
    MissingSamples(Vec<Pair>),
    #[error("state relevance weights must be positive and finite")]
    InvalidRelevance,
    #[error("feature map has dimension {got}, expected {expected}")]
    FeatureDimension { expected: usize, got: usize },
    #[error("unknown constraint label {0:?}")]
    UnknownLabel(RowLabel),
    #[error("sample store: {0}")]
    Store(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Ordered, duplicate-free list of constraint pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    pairs: Vec<Pair>,
    position: HashMap<Pair, usize>,
}

impl ConstraintSet {
    pub fn new(pairs: Vec<Pair>) -> Result<Self, AlpError> {
        if pairs.is_empty() {
            return Err(AlpError::EmptyConstraintSet);
        }
        let mut position = HashMap::with_capacity(pairs.len());
        for (k, &p) in pairs.iter().enumerate() {
            if position.insert(p, k).is_some() {
                return Err(AlpError::DuplicatePair(p.0, p.1));
            }
        }
        Ok(Self { pairs, position })
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, row: usize) -> Pair {
        self.pairs[row]
    }

    pub fn row_of(&self, pair: Pair) -> Option<usize> {
        self.position.get(&pair).copied()
    }

    /// Pairs of the binding rows of `basis`.
    pub fn basis_pairs(&self, basis: &Basis) -> Vec<Pair> {
        basis.rows().iter().map(|&k| self.pairs[k]).collect()
    }

    pub fn label_basis(&self, basis: &Basis) -> BasisLabels {
        BasisLabels {
            vars: basis.vars().to_vec(),
            rows: basis.rows().iter().map(|&k| RowLabel::Pair([self.pairs[k].0, self.pairs[k].1])).collect(),
        }
    }

    pub fn resolve_labels(&self, labels: &BasisLabels) -> Result<Basis, AlpError> {
        let rows = labels
            .rows
            .iter()
            .map(|label| match *label {
                RowLabel::Pair([s, a]) => self.row_of((s, a)).ok_or(AlpError::UnknownLabel(label.clone())),
                RowLabel::Index(k) if k < self.len() => Ok(k),
                RowLabel::Index(_) => Err(AlpError::UnknownLabel(label.clone())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Basis::new(labels.vars.clone(), rows)?)
    }
}

/// A constraint named by its row number or by its `[s, a]` pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RowLabel {
    Index(usize),
    Pair([usize; 2]),
}

/// Basis JSON: `{"I": [...], "J": [[s, a], ...]}` or with plain row numbers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisLabels {
    #[serde(rename = "I")]
    pub vars: Vec<usize>,
    #[serde(rename = "J")]
    pub rows: Vec<RowLabel>,
}

impl BasisLabels {
    /// Labels by row number.
    pub fn from_basis(basis: &Basis) -> Self {
        Self { vars: basis.vars().to_vec(), rows: basis.rows().iter().map(|&k| RowLabel::Index(k)).collect() }
    }
}

/// `K` distinct pairs drawn uniformly, re-drawing duplicates.
pub fn sample_constraints(
    num_states: usize,
    num_actions: usize,
    count: usize,
    rng: &mut dyn RngCore,
) -> Result<ConstraintSet, AlpError> {
    if count == 0 {
        return Err(AlpError::EmptyConstraintSet);
    }
    let available = num_states * num_actions;
    if count > available {
        return Err(AlpError::ExhaustedSpace { requested: count, available });
    }
    let mut seen = std::collections::HashSet::with_capacity(count);
    let mut pairs = Vec::with_capacity(count);
    while pairs.len() < count {
        let p = (rng.gen_range(0..num_states), rng.gen_range(0..num_actions));
        if seen.insert(p) {
            pairs.push(p);
        }
    }
    ConstraintSet::new(pairs)
}

/// Every state-action pair, state-major.
pub fn grid_constraints(num_states: usize, num_actions: usize) -> Result<ConstraintSet, AlpError> {
    let pairs = (0..num_states).flat_map(|s| (0..num_actions).map(move |a| (s, a))).collect();
    ConstraintSet::new(pairs)
}

/// Observed next states per pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleStore {
    samples: BTreeMap<Pair, Vec<StateId>>,
}

#[derive(Serialize, Deserialize)]
struct StoreRecord {
    s: StateId,
    a: ActionId,
    next: Vec<StateId>,
}

impl SampleStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// `per_pair` draws for every pair; pair `(s, a)` uses the stream
    /// `key ++ [s, a]`, so the result is independent of execution order.
    pub fn draw(
        model: &dyn GenerativeModel,
        pairs: &[Pair],
        per_pair: usize,
        seed: u64,
        key: &[u64],
        exec: Execution,
    ) -> Self {
        let lists = map_indexed(exec, pairs.len(), |k| {
            let (s, a) = pairs[k];
            let mut path = key.to_vec();
            path.extend([s as u64, a as u64]);
            let mut rng = rng::stream(seed, &path);
            (0..per_pair).map(|_| model.sample_next(s, a, &mut rng)).collect::<Vec<_>>()
        });
        let mut store = Self::new();
        for (&pair, next) in pairs.iter().zip(lists) {
            store.samples.entry(pair).or_default().extend(next);
        }
        store
    }

    pub fn push(&mut self, pair: Pair, next: StateId) {
        self.samples.entry(pair).or_default().push(next);
    }

    /// Appends every sample of `other` (disjoint keys simply union).
    pub fn merge(&mut self, other: SampleStore) {
        for (pair, next) in other.samples {
            self.samples.entry(pair).or_default().extend(next);
        }
    }

    pub fn samples(&self, pair: Pair) -> &[StateId] {
        self.samples.get(&pair).map_or(&[], Vec::as_slice)
    }

    pub fn count(&self, pair: Pair) -> usize {
        self.samples(pair).len()
    }

    /// Total number of stored transitions.
    pub fn total(&self) -> usize {
        self.samples.values().map(Vec::len).sum()
    }

    pub fn pairs(&self) -> impl Iterator<Item = Pair> + '_ {
        self.samples.keys().copied()
    }

    /// The samples of `pairs` only.
    pub fn restricted(&self, pairs: &[Pair]) -> Self {
        let samples = pairs
            .iter()
            .filter_map(|p| self.samples.get(p).map(|v| (*p, v.clone())))
            .collect();
        Self { samples }
    }

    /// The first `per_pair` samples of each pair.
    pub fn truncated(&self, per_pair: usize) -> Self {
        let samples = self.samples.iter().map(|(p, v)| (*p, v[..v.len().min(per_pair)].to_vec())).collect();
        Self { samples }
    }

    /// One JSON object per pair: `{"s": .., "a": .., "next": [..]}`.
    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        for (&(s, a), next) in &self.samples {
            let line = serde_json::to_string(&StoreRecord { s, a, next: next.clone() })?;
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_jsonl(input: impl BufRead) -> Result<Self, AlpError> {
        let mut store = Self::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|e| AlpError::Store(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: StoreRecord =
                serde_json::from_str(&line).map_err(|e| AlpError::Store(format!("line {}: {e}", lineno + 1)))?;
            store.samples.entry((rec.s, rec.a)).or_default().extend(rec.next);
        }
        Ok(store)
    }
}

/// Positive weights `μ(s)` over a set of evaluation states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRelevance {
    support: Vec<(StateId, f64)>,
}

impl StateRelevance {
    pub fn new(support: Vec<(StateId, f64)>) -> Result<Self, AlpError> {
        if support.is_empty() || support.iter().any(|&(_, w)| !(w > 0.0 && w.is_finite())) {
            return Err(AlpError::InvalidRelevance);
        }
        Ok(Self { support })
    }

    /// `μ(s) = 1/|S|` on every state.
    pub fn uniform(num_states: usize) -> Result<Self, AlpError> {
        Self::new((0..num_states).map(|s| (s, 1.0 / num_states as f64)).collect())
    }

    pub fn support(&self) -> &[(StateId, f64)] {
        &self.support
    }

    /// `r = Σ_s μ(s)·φ(s)`.
    pub fn objective(&self, features: &dyn FeatureMap) -> DenseVector {
        let mut r = vec![0.0; features.dim()];
        for &(s, w) in &self.support {
            for (ri, fi) in r.iter_mut().zip(features.evaluate(s).iter()) {
                *ri += w * fi;
            }
        }
        DenseVector::from_vec_unchecked(r)
    }
}

/// Hoeffding radius `sqrt(ln(2/ε) / (2N))`.
pub fn rad(n: usize, eps: f64) -> f64 {
    assert!(n >= 1 && eps > 0.0 && eps <= 2.0, "rad needs N >= 1 and eps in (0, 2]");
    ((2.0 / eps).ln() / (2.0 * n as f64)).sqrt()
}

/// Estimated constraint row `φ(s) − (γ/N)·Σₙ φ(sₙ)`.
pub fn estimate_row(features: &dyn FeatureMap, s: StateId, samples: &[StateId], gamma: f64) -> Result<DenseVector, AlpError> {
    if samples.is_empty() {
        return Err(AlpError::EmptySamples);
    }
    let mut row = features.evaluate(s).into_vec();
    let scale = gamma / samples.len() as f64;
    for &next in samples {
        for (ri, fi) in row.iter_mut().zip(features.evaluate(next).iter()) {
            *ri -= scale * fi;
        }
    }
    Ok(DenseVector::from_vec_unchecked(row))
}

/// Exact constraint row `φ(s) − γ·Σ P(s′|s,a)·φ(s′)`.
pub fn exact_row(model: &dyn TransitionOracle, features: &dyn FeatureMap, s: StateId, a: ActionId) -> DenseVector {
    let gamma = model.discount();
    let mut row = features.evaluate(s).into_vec();
    for (next, q) in model.transition(s, a) {
        for (ri, fi) in row.iter_mut().zip(features.evaluate(next).iter()) {
            *ri -= gamma * q * fi;
        }
    }
    DenseVector::from_vec_unchecked(row)
}

fn check_pairs(model: &dyn GenerativeModel, constraints: &ConstraintSet) -> Result<(), AlpError> {
    match constraints.pairs().iter().find(|&&(s, a)| s >= model.num_states() || a >= model.num_actions()) {
        Some(&(s, a)) => Err(AlpError::PairOutOfRange(s, a)),
        None => Ok(()),
    }
}

fn assemble(
    model: &dyn GenerativeModel,
    features: &dyn FeatureMap,
    constraints: &ConstraintSet,
    relevance: &StateRelevance,
    rows: Vec<DenseVector>,
) -> Result<StandardLp, AlpError> {
    let d = features.dim();
    let k = constraints.len();
    let mut data = Vec::with_capacity(k * d);
    for row in &rows {
        data.extend_from_slice(row);
    }
    let c = constraints.pairs().iter().map(|&(s, a)| model.cost(s, a)).collect();
    Ok(StandardLp::new(relevance.objective(features), DenseMatrix::new(k, d, data).map_err(LpError::from)?, DenseVector::new(c).map_err(LpError::from)?)?)
}

/// The estimated LP: each row averages the stored samples of its pair.
pub fn build_estimated_lp(
    model: &dyn GenerativeModel,
    features: &dyn FeatureMap,
    constraints: &ConstraintSet,
    store: &SampleStore,
    relevance: &StateRelevance,
) -> Result<StandardLp, AlpError> {
    build_estimated_lp_with(model, features, constraints, store, relevance, Execution::default())
}

pub fn build_estimated_lp_with(
    model: &dyn GenerativeModel,
    features: &dyn FeatureMap,
    constraints: &ConstraintSet,
    store: &SampleStore,
    relevance: &StateRelevance,
    exec: Execution,
) -> Result<StandardLp, AlpError> {
    check_pairs(model, constraints)?;
    let missing: Vec<Pair> = constraints.pairs().iter().copied().filter(|&p| store.count(p) == 0).collect();
    if !missing.is_empty() {
        return Err(AlpError::MissingSamples(missing));
    }
    let gamma = model.discount();
    let rows = map_indexed(exec, constraints.len(), |k| {
        let (s, _) = constraints.pair(k);
        estimate_row(features, s, store.samples(constraints.pair(k)), gamma).expect("samples present")
    });
    assemble(model, features, constraints, relevance, rows)
}

/// The LP with exact expectations, for models with a closed-form kernel.
pub fn build_exact_lp(
    model: &dyn TransitionOracle,
    features: &dyn FeatureMap,
    constraints: &ConstraintSet,
    relevance: &StateRelevance,
    exec: Execution,
) -> Result<StandardLp, AlpError> {
    check_pairs(model, constraints)?;
    let rows = map_indexed(exec, constraints.len(), |k| {
        let (s, a) = constraints.pair(k);
        exact_row(model, features, s, a)
    });
    assemble(model, features, constraints, relevance, rows)
}

/// Order-level constraint count `⌈ln(1/ε)/ε · ln(1/δ)⌉` (unit constant).
pub fn constraint_sample_size(eps: f64, delta: f64) -> usize {
    assert!(eps > 0.0 && eps < 1.0 && delta > 0.0 && delta < 1.0, "eps and delta must lie in (0, 1)");
    let v = (1.0 / eps).ln() / eps * (1.0 / delta).ln();
    // Guard against 2.9999999999999996 style round-off at exact integers.
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r as usize
    } else {
        v.ceil() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rad_examples() {
        assert_eq!(rad(17, 2.0), 0.0);
        assert!((rad(1, 2.0 / std::f64::consts::E.powi(2)) - 1.0).abs() < 1e-15);
        assert!((rad(50, 0.02) - 0.21460).abs() < 1e-5);
    }

    #[test]
    fn sample_size_examples() {
        let e = 1.0 / std::f64::consts::E;
        assert_eq!(constraint_sample_size(e, e), 3);
        assert_eq!(constraint_sample_size(0.1, 0.1), 54);
    }

    #[test]
    fn constraint_set_rejects_duplicates() {
        assert_eq!(ConstraintSet::new(vec![(0, 1), (0, 1)]), Err(AlpError::DuplicatePair(0, 1)));
        assert_eq!(ConstraintSet::new(vec![]), Err(AlpError::EmptyConstraintSet));
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(grid_constraints(40 * 60, 5).unwrap().len(), 12000);
        assert_eq!(grid_constraints(1, 1).unwrap().len(), 1);
        assert_eq!(grid_constraints(6, 4).unwrap().len(), 24);
    }

    #[test]
    fn basis_labels_round_trip() {
        let cs = ConstraintSet::new(vec![(3, 0), (1, 2), (0, 0)]).unwrap();
        let b = Basis::new(vec![1, 4], vec![0, 2]).unwrap();
        let labels = cs.label_basis(&b);
        let json = serde_json::to_string(&labels).unwrap();
        assert_eq!(json, r#"{"I":[1,4],"J":[[3,0],[0,0]]}"#);
        let back: BasisLabels = serde_json::from_str(&json).unwrap();
        assert_eq!(cs.resolve_labels(&back).unwrap(), b);
        let plain: BasisLabels = serde_json::from_str(r#"{"I":[1,4],"J":[0,2]}"#).unwrap();
        assert_eq!(cs.resolve_labels(&plain).unwrap(), b);
    }
}
