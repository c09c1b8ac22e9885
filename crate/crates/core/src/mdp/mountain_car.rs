use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{FeatureTable, GenerativeModel, MdpError, RbfFeatures, StateId, TransitionOracle};
use crate::mdp::ActionId;

pub const POSITION_RANGE: (f64, f64) = (-1.2, 0.6);
pub const VELOCITY_RANGE: (f64, f64) = (-0.07, 0.07);
pub const ACTION_RANGE: (f64, f64) = (-1.0, 1.0);
pub const GOAL_POSITION: f64 = 0.5;

/// Probability that a transition lands exactly on the intended cell before
/// the uniform neighborhood draw.
const INTENDED_PROB: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MountainCarParams {
    pub n_p: usize,
    pub n_v: usize,
    pub n_a: usize,
    /// Half-width, in flattened cells, of the uniform noise neighborhood.
    pub noise_radius: usize,
    pub goal: f64,
    pub gamma: f64,
}

impl Default for MountainCarParams {
    fn default() -> Self {
        Self { n_p: 40, n_v: 60, n_a: 5, noise_radius: 40, goal: GOAL_POSITION, gamma: 0.9 }
    }
}

/// Mountain Car on a `(n_p × n_v)` state grid with `n_a` discrete thrusts.
///
/// States are indexed position-major: `s = i_p·n_v + i_v`. The intended next
/// state is the grid cell nearest the deterministic dynamics; with
/// probability 0.1 the observed state is instead uniform over the flattened
/// index window `[s − r, s + r]` clipped to the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MountainCarModel {
    params: MountainCarParams,
    positions: Vec<f64>,
    velocities: Vec<f64>,
    actions: Vec<f64>,
}

fn linspace((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
}

fn nearest((lo, hi): (f64, f64), n: usize, x: f64) -> usize {
    if n == 1 {
        return 0;
    }
    let t = ((x - lo) / (hi - lo) * (n - 1) as f64).round();
    t.clamp(0.0, (n - 1) as f64) as usize
}

impl MountainCarModel {
    pub fn new(params: MountainCarParams) -> Result<Self, MdpError> {
        if params.n_p == 0 || params.n_v == 0 || params.n_a == 0 {
            return Err(MdpError::Invalid("grid counts must be at least 1".into()));
        }
        if !(params.goal >= POSITION_RANGE.0 && params.goal <= POSITION_RANGE.1) {
            return Err(MdpError::Invalid(format!("goal {} outside the position domain", params.goal)));
        }
        if !(params.gamma > 0.0 && params.gamma < 1.0) {
            return Err(MdpError::Invalid(format!("discount {} not in (0, 1)", params.gamma)));
        }
        Ok(Self {
            positions: linspace(POSITION_RANGE, params.n_p),
            velocities: linspace(VELOCITY_RANGE, params.n_v),
            actions: linspace(ACTION_RANGE, params.n_a),
            params,
        })
    }

    pub fn params(&self) -> &MountainCarParams {
        &self.params
    }

    /// Deterministic dynamics followed by clamping into the domains.
    pub fn intended_step(p: f64, v: f64, a: f64) -> (f64, f64) {
        let v_next = (v + a * 0.0015 - 0.0025 * (3.0 * p).cos()).clamp(VELOCITY_RANGE.0, VELOCITY_RANGE.1);
        let p_next = (p + v_next).clamp(POSITION_RANGE.0, POSITION_RANGE.1);
        (p_next, v_next)
    }

    pub fn state_index(&self, ip: usize, iv: usize) -> StateId {
        ip * self.params.n_v + iv
    }

    /// Grid coordinates `(p, v)` of a state.
    pub fn coords(&self, s: StateId) -> (f64, f64) {
        (self.positions[s / self.params.n_v], self.velocities[s % self.params.n_v])
    }

    pub fn action_value(&self, a: ActionId) -> f64 {
        self.actions[a]
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn velocities(&self) -> &[f64] {
        &self.velocities
    }

    /// Nearest grid cell to a continuous state.
    pub fn cell_of(&self, p: f64, v: f64) -> StateId {
        self.state_index(
            nearest(POSITION_RANGE, self.params.n_p, p),
            nearest(VELOCITY_RANGE, self.params.n_v, v),
        )
    }

    pub fn intended_cell(&self, s: StateId, a: ActionId) -> StateId {
        let (p, v) = self.coords(s);
        let (p2, v2) = Self::intended_step(p, v, self.actions[a]);
        self.cell_of(p2, v2)
    }

    pub fn is_goal(&self, s: StateId) -> bool {
        self.coords(s).0 >= self.params.goal
    }

    /// Clipped noise window around a flattened index.
    fn window(&self, center: StateId) -> (StateId, StateId) {
        let r = self.params.noise_radius;
        (center.saturating_sub(r), (center + r).min(self.num_states() - 1))
    }

    /// RBF features evaluated at every grid state.
    pub fn feature_table(&self, rbf: &RbfFeatures) -> FeatureTable {
        let d = rbf.dim();
        let mut data = Vec::with_capacity(self.num_states() * d);
        for s in 0..self.num_states() {
            let (p, v) = self.coords(s);
            data.extend_from_slice(&rbf.evaluate_point(p, v));
        }
        FeatureTable::new(crate::linalg::DenseMatrix::from_vec_unchecked(self.num_states(), d, data))
            .expect("nonempty grid")
    }

    /// Valley start: `p ~ U[−0.6, −0.4]`, `v = 0`, snapped to the grid.
    pub fn sample_start(&self, rng: &mut dyn RngCore) -> StateId {
        let p = rng.gen_range(-0.6..=-0.4);
        self.cell_of(p, 0.0)
    }
}

impl GenerativeModel for MountainCarModel {
    fn num_states(&self) -> usize {
        self.params.n_p * self.params.n_v
    }

    fn num_actions(&self) -> usize {
        self.params.n_a
    }

    fn discount(&self) -> f64 {
        self.params.gamma
    }

    fn cost(&self, s: StateId, _a: ActionId) -> f64 {
        if self.is_goal(s) {
            0.0
        } else {
            1.0
        }
    }

    fn sample_next(&self, s: StateId, a: ActionId, rng: &mut dyn RngCore) -> StateId {
        let intended = self.intended_cell(s, a);
        if rng.gen::<f64>() < INTENDED_PROB {
            return intended;
        }
        let (lo, hi) = self.window(intended);
        rng.gen_range(lo..=hi)
    }

    fn lookahead(&self, s: StateId, a: ActionId, value: &dyn Fn(StateId) -> f64) -> f64 {
        value(self.intended_cell(s, a))
    }
}

impl TransitionOracle for MountainCarModel {
    fn transition(&self, s: StateId, a: ActionId) -> Vec<(StateId, f64)> {
        let intended = self.intended_cell(s, a);
        let (lo, hi) = self.window(intended);
        let share = (1.0 - INTENDED_PROB) / (hi - lo + 1) as f64;
        (lo..=hi)
            .map(|j| (j, if j == intended { INTENDED_PROB + share } else { share }))
            .collect()
    }
}
