use rand::{Rng, RngCore};

use super::{ActionId, GenerativeModel, MdpError, StateId, TransitionOracle};

/// Finite MDP with an explicit transition tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    /// `p[(s·A + a)·S + s′]`.
    p: Vec<f64>,
    /// `cost[s·A + a]`.
    cost: Vec<f64>,
    gamma: f64,
}

impl TabularMdp {
    /// `transitions[s][a][s′]` and `costs[s][a]`.
    pub fn new(transitions: Vec<Vec<Vec<f64>>>, costs: Vec<Vec<f64>>, gamma: f64) -> Result<Self, MdpError> {
        let num_states = transitions.len();
        if num_states == 0 {
            return Err(MdpError::Invalid("no states".into()));
        }
        let num_actions = transitions[0].len();
        if num_actions == 0 {
            return Err(MdpError::Invalid("no actions".into()));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(MdpError::Invalid(format!("discount {gamma} not in (0, 1)")));
        }
        if costs.len() != num_states {
            return Err(MdpError::Invalid("cost table shape".into()));
        }
        let mut p = Vec::with_capacity(num_states * num_actions * num_states);
        for (s, row) in transitions.iter().enumerate() {
            if row.len() != num_actions {
                return Err(MdpError::Invalid(format!("state {s} has {} actions", row.len())));
            }
            for (a, dist) in row.iter().enumerate() {
                if dist.len() != num_states || dist.iter().any(|q| !(*q >= 0.0 && q.is_finite())) {
                    return Err(MdpError::Invalid(format!("P(.|{s},{a}) is not a distribution over {num_states} states")));
                }
                let total: f64 = dist.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(MdpError::Invalid(format!("P(.|{s},{a}) sums to {total}")));
                }
                p.extend_from_slice(dist);
            }
        }
        let mut cost = Vec::with_capacity(num_states * num_actions);
        for (s, row) in costs.iter().enumerate() {
            if row.len() != num_actions || row.iter().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(MdpError::Invalid(format!("costs of state {s} must be {num_actions} values in [0, 1]")));
            }
            cost.extend_from_slice(row);
        }
        Ok(Self { num_states, num_actions, p, cost, gamma })
    }

    /// Deterministic kernel `s → next[s][a]`.
    pub fn deterministic(next: Vec<Vec<StateId>>, costs: Vec<Vec<f64>>, gamma: f64) -> Result<Self, MdpError> {
        let n = next.len();
        let transitions = next
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&t| {
                        if t >= n {
                            return Err(MdpError::StateOutOfRange(t));
                        }
                        let mut dist = vec![0.0; n];
                        dist[t] = 1.0;
                        Ok(dist)
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(transitions, costs, gamma)
    }

    pub fn probability(&self, s: StateId, a: ActionId, next: StateId) -> f64 {
        self.p[(s * self.num_actions + a) * self.num_states + next]
    }

    fn dist(&self, s: StateId, a: ActionId) -> &[f64] {
        let start = (s * self.num_actions + a) * self.num_states;
        &self.p[start..start + self.num_states]
    }
}

impl GenerativeModel for TabularMdp {
    fn num_states(&self) -> usize {
        self.num_states
    }

    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn discount(&self) -> f64 {
        self.gamma
    }

    fn cost(&self, s: StateId, a: ActionId) -> f64 {
        self.cost[s * self.num_actions + a]
    }

    fn sample_next(&self, s: StateId, a: ActionId, rng: &mut dyn RngCore) -> StateId {
        let dist = self.dist(s, a);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last = 0;
        for (next, &q) in dist.iter().enumerate() {
            if q > 0.0 {
                acc += q;
                last = next;
                if u < acc {
                    return next;
                }
            }
        }
        last
    }

    fn lookahead(&self, s: StateId, a: ActionId, value: &dyn Fn(StateId) -> f64) -> f64 {
        self.dist(s, a).iter().enumerate().filter(|(_, q)| **q > 0.0).map(|(n, q)| q * value(n)).sum()
    }
}

impl TransitionOracle for TabularMdp {
    fn transition(&self, s: StateId, a: ActionId) -> Vec<(StateId, f64)> {
        self.dist(s, a).iter().enumerate().filter(|(_, q)| **q > 0.0).map(|(n, q)| (n, *q)).collect()
    }
}
