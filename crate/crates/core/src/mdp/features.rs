use crate::linalg::{DenseMatrix, DenseVector};

use super::{MdpError, StateId, POSITION_RANGE, VELOCITY_RANGE};

/// Basis functions `φ₁..φ_d` over indexed states.
pub trait FeatureMap: Sync {
    fn dim(&self) -> usize;

    fn evaluate(&self, s: StateId) -> DenseVector;
}

/// Feature vectors stored row-wise, one row per state.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    table: DenseMatrix,
}

impl FeatureTable {
    pub fn new(table: DenseMatrix) -> Result<Self, MdpError> {
        if table.rows() == 0 || table.cols() == 0 {
            return Err(MdpError::Invalid("empty feature table".into()));
        }
        Ok(Self { table })
    }

    /// One-hot features: `φ(s) = e_s`.
    pub fn identity(num_states: usize) -> Result<Self, MdpError> {
        Self::new(DenseMatrix::identity(num_states))
    }

    /// Evaluates `map` on states `0..num_states`.
    pub fn tabulate(map: &dyn FeatureMap, num_states: usize) -> Self {
        let d = map.dim();
        let mut data = Vec::with_capacity(num_states * d);
        for s in 0..num_states {
            data.extend_from_slice(&map.evaluate(s));
        }
        Self { table: DenseMatrix::from_vec_unchecked(num_states, d, data) }
    }

    pub fn num_states(&self) -> usize {
        self.table.rows()
    }

    pub fn row(&self, s: StateId) -> &[f64] {
        self.table.row(s)
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.table
    }

    /// `V(s) = ⟨w, φ(s)⟩` for every state.
    pub fn values(&self, w: &[f64]) -> Vec<f64> {
        (0..self.num_states()).map(|s| crate::linalg::dot(self.row(s), w)).collect()
    }
}

impl FeatureMap for FeatureTable {
    fn dim(&self) -> usize {
        self.table.cols()
    }

    fn evaluate(&self, s: StateId) -> DenseVector {
        DenseVector::from_vec_unchecked(self.row(s).to_vec())
    }
}

fn centers(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..count).map(|i| if i + 1 == count { hi } else { lo + (hi - lo) * i as f64 / (count - 1) as f64 }).collect()
}

fn bumps(x: f64, centers: &[f64], width: f64) -> Vec<f64> {
    centers.iter().map(|c| (-((x - c) / width).powi(2)).exp()).collect()
}

/// Product radial-basis features on the (position, velocity) plane.
///
/// Each axis has `per_axis` Gaussian bumps with equally spaced centers
/// spanning its domain; the feature vector is the flattened outer product,
/// position-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfFeatures {
    p_centers: Vec<f64>,
    v_centers: Vec<f64>,
    p_width: f64,
    v_width: f64,
}

impl RbfFeatures {
    /// The same width on both axes, in raw units.
    pub fn new(per_axis: usize, width: f64) -> Result<Self, MdpError> {
        Self::with_widths(per_axis, width, width)
    }

    pub fn with_widths(per_axis: usize, p_width: f64, v_width: f64) -> Result<Self, MdpError> {
        let ok = |w: f64| w > 0.0 && w.is_finite();
        if per_axis == 0 || !ok(p_width) || !ok(v_width) {
            return Err(MdpError::Invalid(format!(
                "rbf needs centers >= 1 and widths > 0, got {per_axis}, {p_width}, {v_width}"
            )));
        }
        Ok(Self {
            p_centers: centers(POSITION_RANGE.0, POSITION_RANGE.1, per_axis),
            v_centers: centers(VELOCITY_RANGE.0, VELOCITY_RANGE.1, per_axis),
            p_width,
            v_width,
        })
    }

    /// `width` on position; velocity bumps get the same width relative to
    /// the velocity range.
    pub fn domain_scaled(per_axis: usize, width: f64) -> Result<Self, MdpError> {
        let ratio = (VELOCITY_RANGE.1 - VELOCITY_RANGE.0) / (POSITION_RANGE.1 - POSITION_RANGE.0);
        Self::with_widths(per_axis, width, width * ratio)
    }

    pub fn widths(&self) -> (f64, f64) {
        (self.p_width, self.v_width)
    }

    pub fn dim(&self) -> usize {
        self.p_centers.len() * self.v_centers.len()
    }

    pub fn position_centers(&self) -> &[f64] {
        &self.p_centers
    }

    pub fn velocity_centers(&self) -> &[f64] {
        &self.v_centers
    }

    pub fn evaluate_point(&self, p: f64, v: f64) -> DenseVector {
        let fp = bumps(p, &self.p_centers, self.p_width);
        let fv = bumps(v, &self.v_centers, self.v_width);
        let mut out = Vec::with_capacity(fp.len() * fv.len());
        for a in &fp {
            out.extend(fv.iter().map(|b| a * b));
        }
        DenseVector::from_vec_unchecked(out)
    }
}

impl Default for RbfFeatures {
    fn default() -> Self {
        Self::new(5, 0.2).expect("valid defaults")
    }
}

/// The 25 Mountain Car features: 5 bumps of width 0.2 per axis.
pub fn rbf_features(p: f64, v: f64) -> DenseVector {
    RbfFeatures::default().evaluate_point(p, v)
}
