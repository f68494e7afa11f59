use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::DominanceError;
use crate::ode::sig17;
use crate::regions::Region;

/// A symmetric matrix `P` with `p` negative eigenvalues such that
/// `A^T P + P A + 2 lambda P <= -epsilon I` for every Jacobian over `region`.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceCertificate {
    pub p: usize,
    pub lambda: f64,
    pub epsilon: f64,
    pub matrix: DMatrix<f64>,
    pub region: Option<Region>,
    /// Largest eigenvalue of the residual over all checked points.
    pub residual_margin: f64,
    pub checked_points: usize,
    pub meta: CertificateMeta,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CertificateMeta {
    #[serde(default)]
    pub model: String,
    #[serde(default)]
    pub source: String,
    #[serde(default)]
    pub robust: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_version: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver_upper_bound: Option<f64>,
}

#[derive(Serialize)]
struct CertificateOut<'a> {
    p: usize,
    lambda: Box<RawValue>,
    epsilon: Box<RawValue>,
    #[serde(rename = "P")]
    matrix: Vec<Vec<Box<RawValue>>>,
    region: &'a Option<Region>,
    residual_margin: Box<RawValue>,
    checked_points: usize,
    meta: &'a CertificateMeta,
}

#[derive(Deserialize)]
struct CertificateIn {
    p: usize,
    lambda: f64,
    epsilon: f64,
    #[serde(rename = "P")]
    matrix: Vec<Vec<f64>>,
    #[serde(default)]
    region: Option<Region>,
    residual_margin: f64,
    #[serde(default)]
    checked_points: usize,
    #[serde(default)]
    meta: CertificateMeta,
}

pub(crate) fn raw(v: f64) -> Box<RawValue> {
    let text = if v.is_finite() { sig17(v) } else { "null".to_string() };
    RawValue::from_string(text).expect("formatted numbers are valid JSON")
}

impl DominanceCertificate {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// JSON with `P` row-major and all reals at 17 significant digits.
    pub fn to_json(&self) -> String {
        let out = CertificateOut {
            p: self.p,
            lambda: raw(self.lambda),
            epsilon: raw(self.epsilon),
            matrix: self
                .matrix
                .row_iter()
                .map(|r| r.iter().map(|v| raw(*v)).collect())
                .collect(),
            region: &self.region,
            residual_margin: raw(self.residual_margin),
            checked_points: self.checked_points,
            meta: &self.meta,
        };
        serde_json::to_string_pretty(&out).expect("certificates serialize")
    }

    /// Parse a certificate. The matrix must be square; symmetry is checked by
    /// verification, not here.
    pub fn from_json(text: &str) -> Result<Self, DominanceError> {
        let c: CertificateIn =
            serde_json::from_str(text).map_err(|e| DominanceError::Verification(format!("malformed certificate: {e}")))?;
        let n = c.matrix.len();
        if n == 0 || c.matrix.iter().any(|r| r.len() != n) {
            return Err(DominanceError::Dimension("P must be a nonempty square matrix".into()));
        }
        if let Some(region) = &c.region {
            region.validate()?;
        }
        let flat: Vec<f64> = c.matrix.into_iter().flatten().collect();
        Ok(Self {
            p: c.p,
            lambda: c.lambda,
            epsilon: c.epsilon,
            matrix: DMatrix::from_row_slice(n, n, &flat),
            region: c.region,
            residual_margin: c.residual_margin,
            checked_points: c.checked_points,
            meta: c.meta,
        })
    }
}

/// Published dominance matrices for the antithetic loop with first-order
/// production (`mu = 2`, `eta = 10`, `theta1 = gamma = 1`), each checked at the
/// equilibrium of its regime.
pub mod table1 {
    use super::DominanceCertificate;

    /// `theta2 = k = 1`, 0-dominant at rate 0.
    pub const BASELINE: &str = include_str!("../../data/table1/baseline.json");
    /// `theta2 = 4, k = 1`, 2-dominant at rate 1.
    pub const HIGH_SENSING: &str = include_str!("../../data/table1/high_sensing.json");
    /// `theta2 = 1, k = 4`, 2-dominant at rate 1.
    pub const HIGH_CONVERSION: &str = include_str!("../../data/table1/high_conversion.json");

    pub fn all() -> [DominanceCertificate; 3] {
        [BASELINE, HIGH_SENSING, HIGH_CONVERSION]
            .map(|t| DominanceCertificate::from_json(t).expect("bundled certificates parse"))
    }
}
