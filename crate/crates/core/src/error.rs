//! Error types, one enum per subsystem.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("negative {what} component {index}: {value}")]
    NegativeState {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("expected state of dimension {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("cannot compose controller and plant: {0}")]
    Composition(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid integration request: {0}")]
    InvalidRequest(String),
    #[error("step size underflow at t = {t} (h = {h:e}); the problem looks stiff")]
    Stiffness { t: f64, h: f64 },
    #[error("integrator left the nonnegative orthant at t = {t}: component {index} = {value:e}")]
    OrthantViolation { t: f64, index: usize, value: f64 },
    #[error("model evaluation failed at t = {t}: {source}")]
    Model { t: f64, source: ModelError },
    #[error("equilibrium refinement hit a singular Jacobian at {0:?}")]
    SingularJacobian(Vec<f64>),
    #[error("equilibrium refinement did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("insufficient data for classification: {0}")]
    InsufficientData(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error("empty point set")]
    Empty,
    #[error("coordinate {0} is active in the Jacobian but the region leaves it unbounded")]
    UnboundedCoordinate(usize),
    #[error("the model needs an interval for its saturation slope; bind one before enumerating vertices")]
    MissingSlopeInterval,
    #[error("invalid region: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("eigenvalue {re}{im:+}i lies within {tol:e} of the line Re = -{lambda}")]
    BoundarySplit {
        re: f64,
        im: f64,
        lambda: f64,
        tol: f64,
    },
    #[error("transfer function evaluated at a pole (s = {re}{im:+}i)")]
    AtPole { re: f64, im: f64 },
    #[error("contour error: {0}")]
    Contour(String),
    #[error("locus passes within {distance:e} of the critical point; winding number is ambiguous")]
    MarginalWinding { distance: f64 },
    #[error("model {0} has no loop cut for frequency analysis")]
    NoLoop(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DominanceError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("LMI infeasible: best margin {best_margin:e} at vertex {worst_vertex} (target {target:e})")]
    Infeasible {
        best_margin: f64,
        target: f64,
        worst_vertex: usize,
        worst_point: Vec<f64>,
    },
    #[error("degenerate certificate: P has an eigenvalue within {tol:e} of zero; adjust lambda")]
    Degenerate { tol: f64 },
    #[error("solver found degree {found}, expected {expected}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("solver stalled: {0}")]
    Stalled(String),
    #[error("certificate failed re-verification: {0}")]
    Verification(String),
    #[error("classification for degree {0} is not supported (p <= 2 only)")]
    UnsupportedDegree(usize),
    #[error("two distinct fixed points supplied inside a 0-dominant region: {0:?} and {1:?}")]
    Contradiction(Vec<f64>, Vec<f64>),
    #[error(transparent)]
    Region(#[from] RegionError),
}
