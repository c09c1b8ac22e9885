use super::{ActionId, FeatureMap, FeatureTable, GenerativeModel, MdpError, MountainCarModel, StateId};
use crate::linalg::dot;
use crate::par::{map_indexed, Execution};
use crate::rng::{self, tag};

fn argmin_action(model: &dyn GenerativeModel, s: StateId, value: &dyn Fn(StateId) -> f64) -> ActionId {
    let gamma = model.discount();
    let mut best = (0, f64::INFINITY);
    for a in 0..model.num_actions() {
        let q = model.cost(s, a) + gamma * model.lookahead(s, a, value);
        if q < best.1 {
            best = (a, q);
        }
    }
    best.0
}

/// `argmin_a c(s,a) + γ·⟨w, φ(next)⟩` under the model's one-step lookahead,
/// ties to the smallest action index.
pub fn greedy_policy_action(model: &dyn GenerativeModel, features: &dyn FeatureMap, w: &[f64], s: StateId) -> ActionId {
    assert_eq!(w.len(), features.dim(), "weight length");
    argmin_action(model, s, &|n| dot(&features.evaluate(n), w))
}

/// Greedy policy with the value of every state precomputed.
pub struct GreedyPolicy<'a> {
    model: &'a dyn GenerativeModel,
    values: Vec<f64>,
}

impl<'a> GreedyPolicy<'a> {
    pub fn new(model: &'a dyn GenerativeModel, features: &FeatureTable, w: &[f64]) -> Self {
        assert_eq!(w.len(), features.dim(), "weight length");
        Self { model, values: features.values(w) }
    }

    pub fn action(&self, s: StateId) -> ActionId {
        argmin_action(self.model, s, &|n| self.values[n])
    }
}

/// Fraction of episodes that reach the goal within `horizon` noisy steps.
///
/// Episode `e` draws its start state and transitions from its own stream, so
/// the result does not depend on the execution mode.
pub fn rollout_success(
    model: &MountainCarModel,
    policy: &(dyn Fn(StateId) -> ActionId + Sync),
    horizon: usize,
    episodes: usize,
    seed: u64,
    exec: Execution,
) -> Result<f64, MdpError> {
    if horizon == 0 || episodes == 0 {
        return Err(MdpError::Invalid("horizon and episodes must be at least 1".into()));
    }
    let outcomes = map_indexed(exec, episodes, |e| {
        let mut rng = rng::stream(seed, &[tag::ROLLOUT, e as u64]);
        let mut s = model.sample_start(&mut rng);
        if model.is_goal(s) {
            return true;
        }
        for _ in 0..horizon {
            s = model.sample_next(s, policy(s), &mut rng);
            if model.is_goal(s) {
                return true;
            }
        }
        false
    });
    Ok(outcomes.iter().filter(|&&ok| ok).count() as f64 / episodes as f64)
}
