//! Circuit models: the antithetic controller, plant variants, their closed loops,
//! and analytic Jacobians evaluated at arbitrary states.
//!
//! Every model keeps the controller coordinates first, `xi = (z1, z2, x...)`.

mod bistable;
mod closed_loop;
mod controller;
mod hill;
mod linear;
mod params;
mod plant;

use std::fmt::Debug;

use nalgebra::{DMatrix, DVector};

use crate::error::ModelError;
use crate::interval::Interval;

pub use bistable::{bistable_vector_field, BistableSwitch};
pub use closed_loop::{
    closed_loop, closed_loop_jacobian, fop_equilibrium, fop_hill_equilibrium,
    large_eta_instability_indicator, ClosedLoop,
};
pub use controller::{aif_jacobian, aif_vector_field};
pub use hill::hill_value_and_derivative;
pub use linear::LinearModel;
pub use params::{AllSeqPlantParams, BistableParams, ControllerParams, FopPlantParams, HillParams};
pub use plant::{
    all_seq_vector_field, fop_vector_field, Actuation, AllSequestration, FirstOrderProduction,
    Plant, ZeroPlant,
};

/// Values that override the nominal parameters when evaluating a Jacobian at a
/// region vertex.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ParamPins {
    /// Sequestration rate.
    pub eta: Option<f64>,
    /// Slope of the saturating map (Hill actuation or positive feedback).
    pub slope: Option<f64>,
}

/// Declares what the Jacobian depends on, beyond the controller coordinates
/// (which are always active). The dependence on every listed coordinate must be
/// affine for a vertex relaxation to be exact.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JacobianDependence {
    /// Indices into `xi` (always `>= 2`).
    pub plant_coords: Vec<usize>,
    /// The Jacobian carries a nonlinear slope of `z1`, which must be boxed as a parameter.
    pub saturating_slope: bool,
    /// The Jacobian scales with the sequestration rate.
    pub eta: bool,
}

/// Open-loop cut of a feedback model: with `b = input_column` and
/// `c = output_gradient`, the open-loop matrix is `A_open = A_cl + b c^T` and the
/// frozen transfer function is `c^T (sI - A_open)^{-1} b`, closed by `u = -y`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopCut {
    pub input_column: DVector<f64>,
    pub output_gradient: DVector<f64>,
}

/// An autonomous vector field with an analytic Jacobian.
pub trait SystemModel: Send + Sync + Debug {
    fn dim(&self) -> usize;

    /// Identifies the model and the parameter record it was built from.
    fn tag(&self) -> String;

    fn vector_field(&self, xi: &[f64]) -> Result<DVector<f64>, ModelError>;

    fn jacobian(&self, xi: &[f64]) -> DMatrix<f64> {
        self.jacobian_pinned(xi, &ParamPins::default())
    }

    fn jacobian_pinned(&self, xi: &[f64], pins: &ParamPins) -> DMatrix<f64>;

    fn dependence(&self) -> JacobianDependence;

    fn loop_cut(&self, _xi: &[f64]) -> Option<LoopCut> {
        None
    }

    /// Range of the saturating slope when `z1` ranges over the interval.
    fn slope_range(&self, _z1: Interval) -> Option<Interval> {
        None
    }

    fn nominal_eta(&self) -> Option<f64> {
        None
    }

    /// Whether trajectories live in the nonnegative orthant (concentrations).
    fn nonnegative(&self) -> bool {
        true
    }
}

impl<M: SystemModel + ?Sized> SystemModel for Box<M> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn tag(&self) -> String {
        (**self).tag()
    }
    fn vector_field(&self, xi: &[f64]) -> Result<DVector<f64>, ModelError> {
        (**self).vector_field(xi)
    }
    fn jacobian(&self, xi: &[f64]) -> DMatrix<f64> {
        (**self).jacobian(xi)
    }
    fn jacobian_pinned(&self, xi: &[f64], pins: &ParamPins) -> DMatrix<f64> {
        (**self).jacobian_pinned(xi, pins)
    }
    fn dependence(&self) -> JacobianDependence {
        (**self).dependence()
    }
    fn loop_cut(&self, xi: &[f64]) -> Option<LoopCut> {
        (**self).loop_cut(xi)
    }
    fn slope_range(&self, z1: Interval) -> Option<Interval> {
        (**self).slope_range(z1)
    }
    fn nominal_eta(&self) -> Option<f64> {
        (**self).nominal_eta()
    }
    fn nonnegative(&self) -> bool {
        (**self).nonnegative()
    }
}

pub(crate) fn check_dim(xi: &[f64], expected: usize) -> Result<(), ModelError> {
    if xi.len() == expected {
        Ok(())
    } else {
        Err(ModelError::Dimension {
            expected,
            got: xi.len(),
        })
    }
}

/// Central finite-difference Jacobian, step `h * max(1, |xi_j|)`.
///
/// Steps are taken one-sided away from zero for coordinates too close to the
/// orthant boundary.
pub fn finite_difference_jacobian<M: SystemModel + ?Sized>(
    model: &M,
    xi: &[f64],
    h: f64,
) -> Result<DMatrix<f64>, ModelError> {
    let n = model.dim();
    let mut jac = DMatrix::zeros(n, n);
    let mut plus = xi.to_vec();
    let mut minus = xi.to_vec();
    for j in 0..n {
        let step = h * xi[j].abs().max(1.0);
        let one_sided = model.nonnegative() && xi[j] - step < 0.0;
        plus[j] = xi[j] + step;
        minus[j] = if one_sided { xi[j] } else { xi[j] - step };
        let fp = model.vector_field(&plus)?;
        let fm = model.vector_field(&minus)?;
        let denom = plus[j] - minus[j];
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / denom;
        }
        plus[j] = xi[j];
        minus[j] = xi[j];
    }
    Ok(jac)
}
