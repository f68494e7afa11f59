//! Controller-plant interconnection `u = z1`, `u_c = theta2 * y`.
//!
//! The loop is cut at the sensing channel: the open-loop input is `u_c` and the
//! open-loop output is `-theta2 * y`, closed by unit negative feedback. With this
//! sign convention the frozen transfer function of the first-order production loop
//! is `theta1 theta2 eta k z1 / (s (s + gamma)^2 (s + eta (z1 + z2)))`.

use nalgebra::{DMatrix, DVector};

use crate::error::ModelError;
use crate::interval::Interval;
use crate::models::controller::{aif_jacobian_eta, aif_rhs, check_nonnegative};
use crate::models::params::{ControllerParams, FopPlantParams, HillParams};
use crate::models::plant::Plant;
use crate::models::{check_dim, JacobianDependence, LoopCut, ParamPins, SystemModel};

#[derive(Debug, Clone)]
pub struct ClosedLoop<P: Plant> {
    pub controller: ControllerParams,
    pub plant: P,
    pub theta2: f64,
}

/// Compose the controller with a scalar-input scalar-output plant.
pub fn closed_loop<P: Plant>(
    controller: ControllerParams,
    plant: P,
    theta2: f64,
) -> Result<ClosedLoop<P>, ModelError> {
    controller.validate()?;
    if plant.input_dim() != 1 || plant.output_dim() != 1 {
        return Err(ModelError::Composition(format!(
            "controller exposes one output and one input, plant `{}` has {} input(s) and {} output(s)",
            plant.tag(),
            plant.input_dim(),
            plant.output_dim()
        )));
    }
    if !(theta2.is_finite() && theta2 > 0.0) {
        return Err(ModelError::InvalidParameter {
            name: "theta2",
            value: theta2,
            reason: "must be finite and strictly positive",
        });
    }
    Ok(ClosedLoop {
        controller,
        plant,
        theta2,
    })
}

impl<P: Plant> ClosedLoop<P> {
    /// Sensing channel `u_c = theta2 * y` for the plant part of `xi`.
    pub fn sensed_input(&self, xi: &[f64]) -> f64 {
        self.theta2 * self.plant.output(&xi[2..])
    }

    /// Controller coordinates plus the plant's steady state under `u = z1`.
    pub fn extend_with_plant_steady_state(&self, z: [f64; 2]) -> Option<Vec<f64>> {
        let x = self.plant.steady_state(z[0])?;
        let mut xi = vec![z[0], z[1]];
        xi.extend(x.iter());
        Some(xi)
    }
}

impl<P: Plant> SystemModel for ClosedLoop<P> {
    fn dim(&self) -> usize {
        2 + self.plant.dim()
    }

    fn tag(&self) -> String {
        format!(
            "aif(mu={},eta={})+{}+theta2={}",
            self.controller.mu,
            self.controller.eta,
            self.plant.tag(),
            self.theta2
        )
    }

    fn vector_field(&self, xi: &[f64]) -> Result<DVector<f64>, ModelError> {
        check_dim(xi, self.dim())?;
        check_nonnegative("state", xi)?;
        let z = [xi[0], xi[1]];
        let x = &xi[2..];
        let u_c = self.sensed_input(xi);
        let dz = aif_rhs(z, u_c, self.controller.mu, self.controller.eta);
        let dx = self.plant.rhs(x, z[0])?;
        let mut out = DVector::zeros(self.dim());
        out[0] = dz[0];
        out[1] = dz[1];
        out.rows_mut(2, dx.len()).copy_from(&dx);
        Ok(out)
    }

    fn jacobian_pinned(&self, xi: &[f64], pins: &ParamPins) -> DMatrix<f64> {
        let n = self.dim();
        let eta = pins.eta.unwrap_or(self.controller.eta);
        let z = [xi[0], xi[1]];
        let x = &xi[2..];
        let mut j = DMatrix::zeros(n, n);
        j.fixed_view_mut::<2, 2>(0, 0)
            .copy_from(&aif_jacobian_eta(z, eta));
        let m = self.plant.dim();
        if m > 0 {
            let dy = self.plant.output_gradient(x);
            for c in 0..m {
                j[(1, 2 + c)] = self.theta2 * dy[c];
            }
            let du = self.plant.input_gradient(x, z[0], pins.slope);
            for r in 0..m {
                j[(2 + r, 0)] = du[r];
            }
            j.view_mut((2, 2), (m, m))
                .copy_from(&self.plant.state_jacobian(x, z[0]));
        }
        j
    }

    fn dependence(&self) -> JacobianDependence {
        JacobianDependence {
            plant_coords: self.plant.state_dependence().into_iter().map(|i| i + 2).collect(),
            saturating_slope: self.plant.input_slope_range(Interval::point(1.0)).is_some(),
            eta: true,
        }
    }

    fn loop_cut(&self, xi: &[f64]) -> Option<LoopCut> {
        let n = self.dim();
        let mut b = DVector::zeros(n);
        b[1] = 1.0;
        let mut c = DVector::zeros(n);
        let dy = self.plant.output_gradient(&xi[2..]);
        for k in 0..self.plant.dim() {
            c[2 + k] = -self.theta2 * dy[k];
        }
        Some(LoopCut {
            input_column: b,
            output_gradient: c,
        })
    }

    fn slope_range(&self, z1: Interval) -> Option<Interval> {
        self.plant.input_slope_range(z1)
    }

    fn nominal_eta(&self) -> Option<f64> {
        Some(self.controller.eta)
    }
}

/// Closed-loop Jacobian `A_cl(xi)` with nominal parameters.
pub fn closed_loop_jacobian<M: SystemModel + ?Sized>(model: &M, xi: &[f64]) -> DMatrix<f64> {
    model.jacobian(xi)
}

/// Fixed point of the controller + first-order production loop with linear actuation:
///
/// `z1 = mu gamma^2 / (k theta1 theta2)`, `z2 = mu / (eta z1)`,
/// `x1 = mu gamma / (k theta2)`, `x2 = mu / theta2`.
pub fn fop_equilibrium(cp: &ControllerParams, pp: &FopPlantParams) -> Result<[f64; 4], ModelError> {
    pp.validate()?;
    cp.validate()?;
    if cp.mu <= 0.0 {
        return Err(ModelError::InvalidParameter {
            name: "mu",
            value: cp.mu,
            reason: "the loop has no positive equilibrium for mu = 0",
        });
    }
    let x2 = cp.mu / pp.theta2;
    let x1 = pp.gamma * x2 / pp.k;
    let z1 = pp.gamma * x1 / pp.theta1;
    let z2 = cp.mu / (cp.eta * z1);
    Ok([z1, z2, x1, x2])
}

/// Fixed point of the loop with Hill actuation, if the required production is below saturation.
pub fn fop_hill_equilibrium(
    cp: &ControllerParams,
    pp: &FopPlantParams,
    hill: &HillParams,
) -> Option<[f64; 4]> {
    if cp.mu <= 0.0 {
        return None;
    }
    let x2 = cp.mu / pp.theta2;
    let x1 = pp.gamma * x2 / pp.k;
    let z1 = hill.inverse(pp.gamma * x1)?;
    if z1 <= 0.0 {
        return None;
    }
    Some([z1, cp.mu / (cp.eta * z1), x1, x2])
}

/// Both sides of the large-`eta` local instability condition: `(cbrt(theta1 theta2 k / 2), gamma)`.
///
/// No ordering is asserted here; eigenvalues of the closed-loop Jacobian decide stability.
pub fn large_eta_instability_indicator(pp: &FopPlantParams) -> (f64, f64) {
    ((pp.loop_gain() / 2.0).cbrt(), pp.gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::plant::{AllSequestration, FirstOrderProduction, ZeroPlant};
    use crate::models::AllSeqPlantParams;

    fn cp() -> ControllerParams {
        ControllerParams::new(2.0, 10.0).unwrap()
    }

    fn pp(theta2: f64, k: f64) -> FopPlantParams {
        FopPlantParams::new(1.0, theta2, k, 1.0).unwrap()
    }

    #[test]
    fn regime_equilibria() {
        let e = fop_equilibrium(&cp(), &pp(1.0, 1.0)).unwrap();
        for (a, b) in e.iter().zip([2.0, 0.1, 2.0, 2.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        let e = fop_equilibrium(&cp(), &pp(4.0, 1.0)).unwrap();
        assert!((e[0] - 0.5).abs() < 1e-15 && (e[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn equilibrium_zeroes_vector_field_and_regulates_output() {
        for (theta2, k, gamma) in [(1.0, 1.0, 1.0), (4.0, 1.0, 1.0), (1.0, 4.0, 1.0), (2.5, 0.3, 1.7)] {
            let p = FopPlantParams::new(0.8, theta2, k, gamma).unwrap();
            let e = fop_equilibrium(&cp(), &p).unwrap();
            let m = closed_loop(cp(), FirstOrderProduction::linear(p).unwrap(), theta2).unwrap();
            assert!(m.vector_field(&e).unwrap().amax() < 1e-13);
            assert_eq!(theta2 * e[3], cp().mu);
        }
    }

    #[test]
    fn jacobian_block_layout() {
        let m = closed_loop(cp(), FirstOrderProduction::linear(pp(1.0, 1.0)).unwrap(), 1.0).unwrap();
        let j = closed_loop_jacobian(&m, &[2.0, 0.1, 2.0, 2.0]);
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                -1.0, -20.0, 0.0, 0.0, //
                -1.0, -20.0, 0.0, 1.0, //
                1.0, 0.0, -1.0, 0.0, //
                0.0, 0.0, 1.0, -1.0,
            ],
        );
        assert_eq!(j, expected);
    }

    #[test]
    fn hill_coupling_vanishes_at_zero_actuation() {
        let plant = FirstOrderProduction::hill(pp(1.0, 1.0), HillParams::new(0.1, 1.0, 2).unwrap()).unwrap();
        let m = closed_loop(cp(), plant, 1.0).unwrap();
        let j = m.jacobian(&[0.0, 0.3, 1.0, 1.0]);
        assert_eq!(j[(2, 0)], 0.0);
    }

    #[test]
    fn loop_cut_removes_feedback_entry() {
        let m = closed_loop(cp(), FirstOrderProduction::linear(pp(4.0, 1.0)).unwrap(), 4.0).unwrap();
        let xi = [0.5, 0.4, 0.5, 0.5];
        let cut = m.loop_cut(&xi).unwrap();
        let open = m.jacobian(&xi) + &cut.input_column * cut.output_gradient.transpose();
        assert_eq!(open[(1, 3)], 0.0);
    }

    #[test]
    fn zero_plant_leaves_integrator_open() {
        let m = closed_loop(cp(), ZeroPlant, 1.0).unwrap();
        assert_eq!(m.dim(), 2);
        let f = m.vector_field(&[1.0, 0.0]).unwrap();
        assert_eq!(f[0] - f[1], cp().mu);
    }

    #[test]
    fn composition_rejects_bad_gain() {
        let plant = AllSequestration::new(AllSeqPlantParams::new(1.0, 1.0, 1.0, 1.0).unwrap()).unwrap();
        assert!(closed_loop(cp(), plant, 0.0).is_err());
    }

    #[test]
    fn indicator_values() {
        let (l, r) = large_eta_instability_indicator(&pp(1.0, 1.0));
        assert!((l - 0.5f64.cbrt()).abs() < 1e-15 && r == 1.0);
        let (l, _) = large_eta_instability_indicator(&pp(4.0, 1.0));
        assert!((l - 2f64.cbrt()).abs() < 1e-15);
        let p = FopPlantParams::new(2.0, 1.0, 1.0, 1.0).unwrap();
        let (l, r) = large_eta_instability_indicator(&p);
        assert!((l - r).abs() < 1e-15);
    }
}
