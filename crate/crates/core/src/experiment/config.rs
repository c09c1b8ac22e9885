use serde::{Deserialize, Serialize};

use crate::alp::StateRelevance;
use crate::linalg::DenseMatrix;
use crate::mdp::{FeatureTable, MountainCarModel, MountainCarParams, RbfFeatures, TabularMdp};

use super::ExperimentError;

/// Explicit finite MDP: `transitions[s][a][s′]`, `costs[s][a]`, and optional
/// feature rows (one-hot when absent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabularSpec {
    pub transitions: Vec<Vec<Vec<f64>>>,
    pub costs: Vec<Vec<f64>>,
    #[serde(default)]
    pub features: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Environment {
    MountainCar,
    Tabular(TabularSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelevanceMode {
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbfConfig {
    pub centers: usize,
    /// Position width, raw units.
    pub width: f64,
    /// Velocity width, raw units; `null` scales `width` by the ratio of the
    /// velocity range to the position range.
    pub velocity_width: Option<f64>,
}

impl Default for RbfConfig {
    fn default() -> Self {
        Self { centers: 5, width: 0.2, velocity_width: None }
    }
}

impl RbfConfig {
    pub fn features(&self) -> Result<RbfFeatures, ExperimentError> {
        Ok(match self.velocity_width {
            Some(v) => RbfFeatures::with_widths(self.centers, self.width, v)?,
            None => RbfFeatures::domain_scaled(self.centers, self.width)?,
        })
    }
}

/// Experiment configuration; every field has a desk-scale default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: Environment,
    pub gamma: f64,
    /// `(n_p, n_v, n_a)`.
    pub grid: [usize; 3],
    pub rbf: RbfConfig,
    pub noise_radius: usize,
    pub goal: f64,
    /// `L`, samples per constraint pair used for identification.
    pub samples_per_pair: usize,
    /// `N`, resolving steps.
    pub resolve_iterations: usize,
    /// `C`; `null` selects `2‖x̂‖₁ + 1`.
    pub radius: Option<f64>,
    pub mu: RelevanceMode,
    pub seed: u64,
    pub output_dir: String,
    pub episodes: usize,
    pub horizon: usize,
    /// Total samples per constraint pair compared by the success-rate study.
    pub sample_budgets: Vec<usize>,
    pub regret_iterations: Vec<usize>,
    pub regret_seeds: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            environment: Environment::MountainCar,
            gamma: 0.9,
            grid: [20, 30, 5],
            rbf: RbfConfig::default(),
            noise_radius: 20,
            goal: crate::mdp::GOAL_POSITION,
            samples_per_pair: 5,
            resolve_iterations: 2000,
            radius: None,
            mu: RelevanceMode::Uniform,
            seed: 0,
            output_dir: "out".into(),
            episodes: 200,
            horizon: 1000,
            sample_budgets: vec![10],
            regret_iterations: vec![1000, 4000, 16000],
            regret_seeds: 20,
        }
    }
}

impl ExperimentConfig {
    /// The full-scale Mountain Car setting: 40×60×5 grid, 10 samples per pair.
    pub fn full_scale(mut self) -> Self {
        self.grid = [40, 60, 5];
        self.samples_per_pair = 10;
        self.noise_radius = 40;
        self
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Config(m.into()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if self.grid.contains(&0) {
            return bad("grid counts must be at least 1");
        }
        if self.rbf.centers == 0 || !(self.rbf.width > 0.0) || self.rbf.velocity_width.is_some_and(|w| !(w > 0.0)) {
            return bad("rbf needs at least one center and positive widths");
        }
        if self.samples_per_pair == 0 || self.resolve_iterations == 0 {
            return bad("samples_per_pair and resolve_iterations must be at least 1");
        }
        if self.episodes == 0 || self.horizon == 0 {
            return bad("episodes and horizon must be at least 1");
        }
        if self.radius.is_some_and(|c| !(c > 0.0 && c.is_finite())) {
            return bad("radius must be positive");
        }
        if self.regret_seeds == 0 || self.regret_iterations.contains(&0) {
            return bad("regret study needs seeds >= 1 and iteration counts >= 1");
        }
        Ok(())
    }

    pub fn mountain_car_params(&self) -> MountainCarParams {
        MountainCarParams {
            n_p: self.grid[0],
            n_v: self.grid[1],
            n_a: self.grid[2],
            noise_radius: self.noise_radius,
            goal: self.goal,
            gamma: self.gamma,
        }
    }

    pub fn mountain_car(&self) -> Result<(MountainCarModel, FeatureTable), ExperimentError> {
        let model = MountainCarModel::new(self.mountain_car_params())?;
        let rbf = self.rbf.features()?;
        let table = model.feature_table(&rbf);
        Ok((model, table))
    }

    pub fn tabular(&self, spec: &TabularSpec) -> Result<(TabularMdp, FeatureTable), ExperimentError> {
        let model = TabularMdp::new(spec.transitions.clone(), spec.costs.clone(), self.gamma)?;
        let table = match &spec.features {
            Some(rows) => FeatureTable::new(DenseMatrix::from_rows(rows).map_err(|e| ExperimentError::Config(e.to_string()))?)?,
            None => FeatureTable::identity(spec.transitions.len())?,
        };
        if table.num_states() != spec.transitions.len() {
            return Err(ExperimentError::Config("feature table needs one row per state".into()));
        }
        Ok((model, table))
    }

    pub fn relevance(&self, num_states: usize) -> Result<StateRelevance, ExperimentError> {
        match self.mu {
            RelevanceMode::Uniform => Ok(StateRelevance::uniform(num_states)?),
        }
    }
}
