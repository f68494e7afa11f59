use nalgebra::{DMatrix, DVector};

use crate::error::ModelError;
use crate::models::{check_dim, JacobianDependence, LoopCut, ParamPins, SystemModel};

/// `dxi/dt = A xi`, optionally with a loop cut `(b, c)` so that `A = A_open - b c^T`.
///
/// Used for frozen-Jacobian analysis; states are not restricted to the orthant.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub a: DMatrix<f64>,
    pub cut: Option<LoopCut>,
    pub label: String,
}

impl LinearModel {
    pub fn new(a: DMatrix<f64>) -> Self {
        assert!(a.is_square(), "linear model needs a square matrix");
        Self {
            a,
            cut: None,
            label: "linear".into(),
        }
    }

    pub fn with_cut(mut self, cut: LoopCut) -> Self {
        self.cut = Some(cut);
        self
    }
}

impl SystemModel for LinearModel {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn tag(&self) -> String {
        self.label.clone()
    }

    fn vector_field(&self, xi: &[f64]) -> Result<DVector<f64>, ModelError> {
        check_dim(xi, self.dim())?;
        Ok(&self.a * DVector::from_column_slice(xi))
    }

    fn jacobian_pinned(&self, _xi: &[f64], _pins: &ParamPins) -> DMatrix<f64> {
        self.a.clone()
    }

    fn dependence(&self) -> JacobianDependence {
        JacobianDependence::default()
    }

    fn loop_cut(&self, _xi: &[f64]) -> Option<LoopCut> {
        self.cut.clone()
    }

    fn nonnegative(&self) -> bool {
        false
    }
}
