use serde::{Deserialize, Serialize};

use crate::error::ModelError;

fn positive(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name,
            value,
            reason: "must be finite and strictly positive",
        })
    }
}

fn nonnegative(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name,
            value,
            reason: "must be finite and nonnegative",
        })
    }
}

/// Antithetic controller constants: reference rate `mu` and sequestration rate `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    pub mu: f64,
    pub eta: f64,
}

impl ControllerParams {
    pub fn new(mu: f64, eta: f64) -> Result<Self, ModelError> {
        let p = Self { mu, eta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        nonnegative("mu", self.mu)?;
        positive("eta", self.eta)
    }

    pub fn with_eta(&self, eta: f64) -> Self {
        Self { eta, ..*self }
    }
}

/// First-order production plant: actuation gain, sensing gain, production and degradation rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FopPlantParams {
    pub theta1: f64,
    pub theta2: f64,
    pub k: f64,
    pub gamma: f64,
}

impl FopPlantParams {
    pub fn new(theta1: f64, theta2: f64, k: f64, gamma: f64) -> Result<Self, ModelError> {
        let p = Self {
            theta1,
            theta2,
            k,
            gamma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        positive("theta1", self.theta1)?;
        positive("theta2", self.theta2)?;
        positive("k", self.k)?;
        positive("gamma", self.gamma)
    }

    /// Loop gain `theta1 * theta2 * k` of the linearized interconnection.
    pub fn loop_gain(&self) -> f64 {
        self.theta1 * self.theta2 * self.k
    }
}

/// Hill saturation `u^N / (k1 + k2 u^N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillParams {
    pub k1: f64,
    pub k2: f64,
    pub n_exp: u32,
}

impl HillParams {
    pub fn new(k1: f64, k2: f64, n_exp: u32) -> Result<Self, ModelError> {
        let p = Self { k1, k2, n_exp };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        positive("k1", self.k1)?;
        nonnegative("k2", self.k2)?;
        if self.n_exp == 0 {
            return Err(ModelError::InvalidParameter {
                name: "n_exp",
                value: 0.0,
                reason: "Hill coefficient must be at least 1",
            });
        }
        Ok(())
    }
}

/// All-sequestration plant: zeroth-order productions `phi1`, `phi2`, binding rates `theta1`, `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllSeqPlantParams {
    pub phi1: f64,
    pub phi2: f64,
    pub theta1: f64,
    pub k: f64,
}

impl AllSeqPlantParams {
    pub fn new(phi1: f64, phi2: f64, theta1: f64, k: f64) -> Result<Self, ModelError> {
        let p = Self {
            phi1,
            phi2,
            theta1,
            k,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        positive("phi1", self.phi1)?;
        positive("phi2", self.phi2)?;
        positive("theta1", self.theta1)?;
        positive("k", self.k)
    }
}

/// Sequestration switch with positive feedback on the actuator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BistableParams {
    pub mu1: f64,
    pub mu2: f64,
    pub theta1: f64,
    pub eta: f64,
    pub gamma: f64,
}

impl BistableParams {
    pub fn new(mu1: f64, mu2: f64, theta1: f64, eta: f64, gamma: f64) -> Result<Self, ModelError> {
        let p = Self {
            mu1,
            mu2,
            theta1,
            eta,
            gamma,
        };
        p.validate()?;
        Ok(p)
    }

    /// `gamma = 0` is accepted for the boundary case of a pure switch; `eta` must be positive.
    pub fn validate(&self) -> Result<(), ModelError> {
        nonnegative("mu1", self.mu1)?;
        nonnegative("mu2", self.mu2)?;
        nonnegative("theta1", self.theta1)?;
        positive("eta", self.eta)?;
        nonnegative("gamma", self.gamma)
    }
}
