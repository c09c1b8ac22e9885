//! Generative models, feature maps, and policies.
//!
//! States and actions of every model are finite and indexed; continuous
//! environments expose their discretization grid through the same indices.

mod features;
mod mountain_car;
mod policy;
mod tabular;

use rand::RngCore;
use thiserror::Error;

pub use features::{rbf_features, FeatureMap, FeatureTable, RbfFeatures};
pub use mountain_car::{
    MountainCarModel, MountainCarParams, ACTION_RANGE, GOAL_POSITION, POSITION_RANGE, VELOCITY_RANGE,
};
pub use policy::{greedy_policy_action, rollout_success, GreedyPolicy};
pub use tabular::TabularMdp;

pub type StateId = usize;
pub type ActionId = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MdpError {
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("state {0} out of range")]
    StateOutOfRange(StateId),
}

/// Sampling access to an MDP: `s′ ~ P(·|s, a)` plus the cost table and discount.
pub trait GenerativeModel: Sync {
    fn num_states(&self) -> usize;

    fn num_actions(&self) -> usize;

    fn discount(&self) -> f64;

    /// Deterministic cost in `[0, 1]`.
    fn cost(&self, s: StateId, a: ActionId) -> f64;

    fn sample_next(&self, s: StateId, a: ActionId, rng: &mut dyn RngCore) -> StateId;

    /// One-step lookahead of `value` used by greedy action selection.
    fn lookahead(&self, s: StateId, a: ActionId, value: &dyn Fn(StateId) -> f64) -> f64;
}

/// Models whose transition law is available in closed form.
pub trait TransitionOracle: GenerativeModel {
    /// Support and probabilities of `P(·|s, a)`.
    fn transition(&self, s: StateId, a: ActionId) -> Vec<(StateId, f64)>;
}
