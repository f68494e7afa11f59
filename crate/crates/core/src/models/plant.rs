//! Plants driven by the controller output `u = z1` and sensed through `y`.

use std::fmt::Debug;

use nalgebra::{DMatrix, DVector, Vector2};

use crate::error::ModelError;
use crate::interval::Interval;
use crate::models::controller::check_nonnegative;
use crate::models::params::{AllSeqPlantParams, FopPlantParams, HillParams};

/// A single-input single-output plant fragment.
pub trait Plant: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn tag(&self) -> String;

    fn input_dim(&self) -> usize {
        1
    }

    fn output_dim(&self) -> usize {
        1
    }

    fn rhs(&self, x: &[f64], u: f64) -> Result<DVector<f64>, ModelError>;

    /// Partial derivative of `rhs` with respect to the plant state.
    fn state_jacobian(&self, x: &[f64], u: f64) -> DMatrix<f64>;

    /// Partial derivative of `rhs` with respect to `u`. A `slope` pin replaces the
    /// derivative of a saturating actuation.
    fn input_gradient(&self, x: &[f64], u: f64, slope: Option<f64>) -> DVector<f64>;

    fn output(&self, x: &[f64]) -> f64;

    fn output_gradient(&self, x: &[f64]) -> DVector<f64>;

    /// Plant coordinates the Jacobian depends on (affinely).
    fn state_dependence(&self) -> Vec<usize>;

    /// Range of the actuation slope for `u` in the interval, for saturating actuations.
    fn input_slope_range(&self, _u: Interval) -> Option<Interval> {
        None
    }

    /// Plant state and output at steady state under a constant input, when unique.
    fn steady_state(&self, u: f64) -> Option<DVector<f64>>;
}

/// How the controller output drives production of `x1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Actuation {
    /// `theta1 * u` with `theta1` taken from the plant parameters.
    Linear,
    Hill(HillParams),
}

/// First-order production: `dx1 = theta1(u) - gamma x1`, `dx2 = k x1 - gamma x2`, `y = x2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderProduction {
    pub params: FopPlantParams,
    pub actuation: Actuation,
}

impl FirstOrderProduction {
    pub fn linear(params: FopPlantParams) -> Result<Self, ModelError> {
        params.validate()?;
        Ok(Self {
            params,
            actuation: Actuation::Linear,
        })
    }

    pub fn hill(params: FopPlantParams, hill: HillParams) -> Result<Self, ModelError> {
        params.validate()?;
        hill.validate()?;
        Ok(Self {
            params,
            actuation: Actuation::Hill(hill),
        })
    }

    fn actuate(&self, u: f64) -> (f64, f64) {
        match self.actuation {
            Actuation::Linear => (self.params.theta1 * u, self.params.theta1),
            Actuation::Hill(h) => (h.value(u), h.slope(u)),
        }
    }
}

/// Plant vector field with linear actuation `theta1 u`.
pub fn fop_vector_field(x: [f64; 2], u: f64, p: &FopPlantParams) -> Result<Vector2<f64>, ModelError> {
    check_nonnegative("plant state", &x)?;
    Ok(Vector2::new(
        p.theta1 * u - p.gamma * x[0],
        p.k * x[0] - p.gamma * x[1],
    ))
}

impl Plant for FirstOrderProduction {
    fn dim(&self) -> usize {
        2
    }

    fn tag(&self) -> String {
        let p = &self.params;
        match self.actuation {
            Actuation::Linear => format!(
                "fop(theta1={},theta2={},k={},gamma={})",
                p.theta1, p.theta2, p.k, p.gamma
            ),
            Actuation::Hill(h) => format!(
                "fop-hill(k1={},k2={},N={},theta2={},k={},gamma={})",
                h.k1, h.k2, h.n_exp, p.theta2, p.k, p.gamma
            ),
        }
    }

    fn rhs(&self, x: &[f64], u: f64) -> Result<DVector<f64>, ModelError> {
        check_nonnegative("plant state", x)?;
        if matches!(self.actuation, Actuation::Hill(_)) {
            check_nonnegative("plant input", &[u])?;
        }
        let p = &self.params;
        let (act, _) = self.actuate(u);
        Ok(DVector::from_vec(vec![
            act - p.gamma * x[0],
            p.k * x[0] - p.gamma * x[1],
        ]))
    }

    fn state_jacobian(&self, _x: &[f64], _u: f64) -> DMatrix<f64> {
        let p = &self.params;
        DMatrix::from_row_slice(2, 2, &[-p.gamma, 0.0, p.k, -p.gamma])
    }

    fn input_gradient(&self, _x: &[f64], u: f64, slope: Option<f64>) -> DVector<f64> {
        let d = slope.unwrap_or_else(|| self.actuate(u.max(0.0)).1);
        DVector::from_vec(vec![d, 0.0])
    }

    fn output(&self, x: &[f64]) -> f64 {
        x[1]
    }

    fn output_gradient(&self, _x: &[f64]) -> DVector<f64> {
        DVector::from_vec(vec![0.0, 1.0])
    }

    fn state_dependence(&self) -> Vec<usize> {
        Vec::new()
    }

    fn input_slope_range(&self, u: Interval) -> Option<Interval> {
        match self.actuation {
            Actuation::Linear => None,
            Actuation::Hill(h) => Some(h.slope_range(u)),
        }
    }

    fn steady_state(&self, u: f64) -> Option<DVector<f64>> {
        let p = &self.params;
        let x1 = self.actuate(u.max(0.0)).0 / p.gamma;
        Some(DVector::from_vec(vec![x1, p.k * x1 / p.gamma]))
    }
}

/// All-sequestration plant: `dx1 = phi1 - theta1 x1 u`, `dx2 = phi2 - k x1 x2`, `y = x2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllSequestration {
    pub params: AllSeqPlantParams,
}

impl AllSequestration {
    pub fn new(params: AllSeqPlantParams) -> Result<Self, ModelError> {
        params.validate()?;
        Ok(Self { params })
    }
}

pub fn all_seq_vector_field(
    x: [f64; 2],
    u: f64,
    p: &AllSeqPlantParams,
) -> Result<Vector2<f64>, ModelError> {
    check_nonnegative("plant state", &x)?;
    check_nonnegative("plant input", &[u])?;
    Ok(Vector2::new(
        p.phi1 - p.theta1 * x[0] * u,
        p.phi2 - p.k * x[0] * x[1],
    ))
}

impl Plant for AllSequestration {
    fn dim(&self) -> usize {
        2
    }

    fn tag(&self) -> String {
        let p = &self.params;
        format!(
            "all-seq(phi1={},phi2={},theta1={},k={})",
            p.phi1, p.phi2, p.theta1, p.k
        )
    }

    fn rhs(&self, x: &[f64], u: f64) -> Result<DVector<f64>, ModelError> {
        let v = all_seq_vector_field([x[0], x[1]], u, &self.params)?;
        Ok(DVector::from_column_slice(v.as_slice()))
    }

    fn state_jacobian(&self, x: &[f64], u: f64) -> DMatrix<f64> {
        let p = &self.params;
        DMatrix::from_row_slice(2, 2, &[-p.theta1 * u, 0.0, -p.k * x[1], -p.k * x[0]])
    }

    fn input_gradient(&self, x: &[f64], _u: f64, _slope: Option<f64>) -> DVector<f64> {
        DVector::from_vec(vec![-self.params.theta1 * x[0], 0.0])
    }

    fn output(&self, x: &[f64]) -> f64 {
        x[1]
    }

    fn output_gradient(&self, _x: &[f64]) -> DVector<f64> {
        DVector::from_vec(vec![0.0, 1.0])
    }

    fn state_dependence(&self) -> Vec<usize> {
        vec![0, 1]
    }

    fn steady_state(&self, u: f64) -> Option<DVector<f64>> {
        let p = &self.params;
        if u <= 0.0 {
            return None;
        }
        let x1 = p.phi1 / (p.theta1 * u);
        Some(DVector::from_vec(vec![x1, p.phi2 / (p.k * x1)]))
    }
}

/// Plant with no state and output `y = 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ZeroPlant;

impl Plant for ZeroPlant {
    fn dim(&self) -> usize {
        0
    }

    fn tag(&self) -> String {
        "zero".into()
    }

    fn rhs(&self, _x: &[f64], _u: f64) -> Result<DVector<f64>, ModelError> {
        Ok(DVector::zeros(0))
    }

    fn state_jacobian(&self, _x: &[f64], _u: f64) -> DMatrix<f64> {
        DMatrix::zeros(0, 0)
    }

    fn input_gradient(&self, _x: &[f64], _u: f64, _slope: Option<f64>) -> DVector<f64> {
        DVector::zeros(0)
    }

    fn output(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn output_gradient(&self, _x: &[f64]) -> DVector<f64> {
        DVector::zeros(0)
    }

    fn state_dependence(&self) -> Vec<usize> {
        Vec::new()
    }

    fn steady_state(&self, _u: f64) -> Option<DVector<f64>> {
        Some(DVector::zeros(0))
    }
}
