use nalgebra::{DMatrix, DVector, Vector2};

use crate::error::ModelError;
use crate::interval::Interval;
use crate::models::controller::check_nonnegative;
use crate::models::params::BistableParams;
use crate::models::{check_dim, JacobianDependence, ParamPins, SystemModel};

/// `(mu1 + theta1 z1/(1 + theta1 z1) - eta z1 z2 - gamma z1, mu2 - eta z1 z2)`
pub fn bistable_vector_field(z: [f64; 2], p: &BistableParams) -> Result<Vector2<f64>, ModelError> {
    check_nonnegative("state", &z)?;
    let seq = p.eta * z[0] * z[1];
    let feedback = p.theta1 * z[0] / (1.0 + p.theta1 * z[0]);
    Ok(Vector2::new(
        p.mu1 + feedback - seq - p.gamma * z[0],
        p.mu2 - seq,
    ))
}

/// Sequestration switch with positive autoregulation of the actuator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BistableSwitch {
    pub params: BistableParams,
}

impl BistableSwitch {
    pub fn new(params: BistableParams) -> Result<Self, ModelError> {
        params.validate()?;
        Ok(Self { params })
    }

    fn feedback_slope(&self, z1: f64) -> f64 {
        let d = 1.0 + self.params.theta1 * z1;
        self.params.theta1 / (d * d)
    }
}

impl SystemModel for BistableSwitch {
    fn dim(&self) -> usize {
        2
    }

    fn tag(&self) -> String {
        let p = &self.params;
        format!(
            "bistable(mu1={},mu2={},theta1={},eta={},gamma={})",
            p.mu1, p.mu2, p.theta1, p.eta, p.gamma
        )
    }

    fn vector_field(&self, xi: &[f64]) -> Result<DVector<f64>, ModelError> {
        check_dim(xi, 2)?;
        let v = bistable_vector_field([xi[0], xi[1]], &self.params)?;
        Ok(DVector::from_column_slice(v.as_slice()))
    }

    fn jacobian_pinned(&self, xi: &[f64], pins: &ParamPins) -> DMatrix<f64> {
        let p = &self.params;
        let eta = pins.eta.unwrap_or(p.eta);
        let slope = pins.slope.unwrap_or_else(|| self.feedback_slope(xi[0].max(0.0)));
        DMatrix::from_row_slice(
            2,
            2,
            &[
                slope - eta * xi[1] - p.gamma,
                -eta * xi[0],
                -eta * xi[1],
                -eta * xi[0],
            ],
        )
    }

    fn dependence(&self) -> JacobianDependence {
        JacobianDependence {
            plant_coords: Vec::new(),
            saturating_slope: true,
            eta: true,
        }
    }

    fn slope_range(&self, z1: Interval) -> Option<Interval> {
        // theta1 / (1 + theta1 z1)^2 is decreasing on z1 >= 0
        Some(Interval {
            lo: self.feedback_slope(z1.hi.max(0.0)),
            hi: self.feedback_slope(z1.lo.max(0.0)),
        })
    }

    fn nominal_eta(&self) -> Option<f64> {
        Some(self.params.eta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let p = BistableParams::new(0.0, 0.0, 1.0, 1.0, 0.5).unwrap();
        assert_eq!(bistable_vector_field([0.0, 3.0], &p).unwrap(), Vector2::zeros());

        let p = BistableParams::new(0.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(
            bistable_vector_field([1.0, 1.0], &p).unwrap(),
            Vector2::new(-0.5, 0.0)
        );
        assert!(bistable_vector_field([1.0, -1.0], &p).is_err());
    }

    #[test]
    fn feedback_term_is_bounded() {
        let p = BistableParams::new(0.0, 0.0, 3.0, 1.0, 0.0).unwrap();
        for z1 in [0.0, 0.1, 1.0, 1e3, 1e12] {
            let f = bistable_vector_field([z1, 0.0], &p).unwrap();
            assert!(f[0] <= 1.0);
        }
    }
}
