//! Simulation of closed-loop models: adaptive integration, equilibrium refinement,
//! and attractor classification from trajectories.

mod classify;
mod equilibrium;
mod integrator;

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::SimError;

pub use classify::{
    classify_trajectory, classify_trajectory_with, AttractorKind, AttractorReport, ClassifyOptions,
    CycleSummary, Diagnostics,
};
pub use equilibrium::refine_equilibrium;
pub use integrator::{integrate, IntegratorSettings};

/// Components may dip this far below zero before the integrator projects them back.
pub const TOL_NEG: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub model_tag: String,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Time-stamped states, one row per accepted step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Vector field at each sample; empty when the trajectory was not produced by
    /// [`integrate`].
    pub derivatives: Vec<Vec<f64>>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    /// Build a trajectory from raw samples, checking the invariants.
    pub fn from_samples(times: Vec<f64>, states: Vec<Vec<f64>>) -> Result<Self, SimError> {
        let traj = Trajectory {
            times,
            states,
            derivatives: Vec::new(),
            meta: TrajectoryMeta {
                model_tag: "samples".into(),
                rel_tol: f64::NAN,
                abs_tol: f64::NAN,
                max_step: f64::NAN,
                accepted_steps: 0,
                rejected_steps: 0,
            },
        };
        traj.validate()?;
        Ok(traj)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.times.len() != self.states.len() {
            return Err(SimError::InvalidRequest(format!(
                "{} times but {} states",
                self.times.len(),
                self.states.len()
            )));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SimError::InvalidRequest("times must be strictly increasing".into()));
        }
        let n = self.dim();
        for (t, x) in self.times.iter().zip(&self.states) {
            if x.len() != n || x.iter().any(|v| !v.is_finite()) {
                return Err(SimError::InvalidRequest(format!("non-finite or ragged state at t = {t}")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    /// Index of the first sample at or after `t0 + fraction * (t_end - t0)`.
    pub fn transient_cut(&self, fraction: f64) -> usize {
        let (Some(&t0), Some(&t1)) = (self.times.first(), self.times.last()) else {
            return 0;
        };
        let t_cut = t0 + fraction.clamp(0.0, 1.0) * (t1 - t0);
        self.times.partition_point(|&t| t < t_cut)
    }

    /// CSV with header `t,xi_1,...,xi_n`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.dim();
        write!(w, "t")?;
        for i in 1..=n {
            write!(w, ",xi_{i}")?;
        }
        writeln!(w)?;
        for (t, x) in self.times.iter().zip(&self.states) {
            write!(w, "{}", sig17(*t))?;
            for v in x {
                write!(w, ",{}", sig17(*v))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

/// Scientific notation with 17 significant digits.
pub fn sig17(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let traj = Trajectory::from_samples(vec![0.0, 0.5], vec![vec![1.0, 2.0], vec![0.1, 1.0 / 3.0]]).unwrap();
        let csv = traj.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,xi_1,xi_2"));
        assert_eq!(
            lines.next(),
            Some("0.0000000000000000e0,1.0000000000000000e0,2.0000000000000000e0")
        );
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(row[2], 1.0 / 3.0);
    }

    #[test]
    fn rejects_non_increasing_times() {
        assert!(Trajectory::from_samples(vec![0.0, 0.0], vec![vec![1.0], vec![1.0]]).is_err());
    }
}
