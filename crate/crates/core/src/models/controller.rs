//! Antithetic integral feedback controller.
//!
//! Actuator `z1` and sensor `z2` annihilate at rate `eta`:
//!
//! ```text
//! dz1/dt = mu  - eta z1 z2
//! dz2/dt = u_c - eta z1 z2
//! y_c    = z1
//! ```
//!
//! so the difference `z1 - z2` integrates `mu - u_c`.

use nalgebra::{Matrix2, Vector2};

use crate::error::ModelError;
use crate::models::params::ControllerParams;

pub(crate) fn check_nonnegative(what: &'static str, v: &[f64]) -> Result<(), ModelError> {
    for (index, &value) in v.iter().enumerate() {
        if value < 0.0 || value.is_nan() {
            return Err(ModelError::NegativeState { what, index, value });
        }
    }
    Ok(())
}

pub fn aif_vector_field(
    z: [f64; 2],
    u_c: f64,
    p: &ControllerParams,
) -> Result<Vector2<f64>, ModelError> {
    check_nonnegative("controller state", &z)?;
    check_nonnegative("controller input", &[u_c])?;
    Ok(aif_rhs(z, u_c, p.mu, p.eta))
}

#[inline]
pub(crate) fn aif_rhs(z: [f64; 2], u_c: f64, mu: f64, eta: f64) -> Vector2<f64> {
    let seq = eta * z[0] * z[1];
    Vector2::new(mu - seq, u_c - seq)
}

/// Jacobian of the controller along any trajectory. The input column for `u_c` is `(0, 1)`.
pub fn aif_jacobian(z: [f64; 2], p: &ControllerParams) -> Matrix2<f64> {
    aif_jacobian_eta(z, p.eta)
}

#[inline]
pub(crate) fn aif_jacobian_eta(z: [f64; 2], eta: f64) -> Matrix2<f64> {
    let a = -eta * z[1];
    let b = -eta * z[0];
    Matrix2::new(a, b, a, b)
}
