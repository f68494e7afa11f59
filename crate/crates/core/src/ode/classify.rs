use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::ode::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    /// Bound on late-window drift and on the final vector-field norm, relative to `max(1, |xi|_inf)`.
    pub eq_tol: f64,
    /// Relative distance between the last two section returns.
    pub closure_tol: f64,
    /// Relative spread `(max - min) / mean` of return times.
    pub period_dispersion: f64,
    pub min_returns: usize,
    pub min_samples: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            eq_tol: 1e-3,
            closure_tol: 1e-3,
            period_dispersion: 0.01,
            min_returns: 3,
            min_samples: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttractorKind {
    Equilibrium,
    LimitCycle,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSummary {
    pub period: f64,
    pub returns: usize,
    pub section_point: Vec<f64>,
    pub section_normal: Vec<f64>,
    /// Trajectory samples covering the last full period.
    pub samples: Vec<Vec<f64>>,
    pub state_min: Vec<f64>,
    pub state_max: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub window_samples: usize,
    pub window_start: f64,
    pub tail_variation: f64,
    pub vector_field_norm: f64,
    pub returns: usize,
    pub period_dispersion: Option<f64>,
    pub closure_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractorReport {
    pub kind: AttractorKind,
    pub equilibrium: Option<Vec<f64>>,
    pub cycle: Option<CycleSummary>,
    pub diagnostics: Diagnostics,
}

impl AttractorReport {
    pub fn period(&self) -> Option<f64> {
        self.cycle.as_ref().map(|c| c.period)
    }
}

pub fn classify_trajectory(traj: &Trajectory, transient_fraction: f64) -> Result<AttractorReport, SimError> {
    classify_trajectory_with(traj, transient_fraction, &ClassifyOptions::default())
}

/// Classify the attractor reached by `traj` after discarding the first
/// `transient_fraction` of its time span.
///
/// An equilibrium is declared when the second half of the window stays within
/// `eq_tol` of the final state and the final vector field is below `eq_tol`.
/// Otherwise returns to a Poincare section (through the window mean, normal to the
/// principal direction of the window) are used to test for a periodic orbit.
pub fn classify_trajectory_with(
    traj: &Trajectory,
    transient_fraction: f64,
    opts: &ClassifyOptions,
) -> Result<AttractorReport, SimError> {
    traj.validate()?;
    if !(0.0..1.0).contains(&transient_fraction) {
        return Err(SimError::InvalidRequest(format!(
            "transient fraction must lie in [0, 1), got {transient_fraction}"
        )));
    }
    let start = traj.transient_cut(transient_fraction);
    let times = &traj.times[start..];
    let states = &traj.states[start..];
    let has_derivs = traj.derivatives.len() == traj.times.len();
    let derivs = if has_derivs { &traj.derivatives[start..] } else { &[][..] };
    if times.len() < 2 {
        return Err(SimError::InsufficientData(format!(
            "post-transient window holds {} sample(s)",
            times.len()
        )));
    }

    let last = states.last().unwrap();
    let scale = inf_norm(last).max(1.0);
    let half = times.len() / 2;
    let tail_variation = states[half..]
        .iter()
        .map(|x| x.iter().zip(last).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let vector_field_norm = if has_derivs {
        inf_norm(derivs.last().unwrap())
    } else {
        let n = times.len();
        let dt = times[n - 1] - times[n - 2];
        states[n - 1]
            .iter()
            .zip(&states[n - 2])
            .map(|(a, b)| ((a - b) / dt).abs())
            .fold(0.0, f64::max)
    };

    let section = poincare_returns(times, states, derivs);
    let n_returns = section.as_ref().map_or(0, |s| s.crossings.len());

    if times.len() < opts.min_samples && n_returns < 10 {
        return Err(SimError::InsufficientData(format!(
            "post-transient window holds {} samples and {} section returns",
            times.len(),
            n_returns
        )));
    }

    let mut diagnostics = Diagnostics {
        window_samples: times.len(),
        window_start: times[0],
        tail_variation,
        vector_field_norm,
        returns: n_returns,
        period_dispersion: None,
        closure_residual: None,
    };

    if tail_variation <= opts.eq_tol * scale && vector_field_norm <= opts.eq_tol * scale {
        return Ok(AttractorReport {
            kind: AttractorKind::Equilibrium,
            equilibrium: Some(last.clone()),
            cycle: None,
            diagnostics,
        });
    }

    let undecided = |diagnostics| AttractorReport {
        kind: AttractorKind::Undecided,
        equilibrium: None,
        cycle: None,
        diagnostics,
    };
    let Some(section) = section else {
        return Ok(undecided(diagnostics));
    };
    let crossings = &section.crossings;
    if crossings.len() < opts.min_returns {
        return Ok(undecided(diagnostics));
    }
    let periods: Vec<f64> = crossings.windows(2).map(|w| w[1].0 - w[0].0).collect();
    let mean = periods.iter().sum::<f64>() / periods.len() as f64;
    let spread = periods.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - periods.iter().cloned().fold(f64::INFINITY, f64::min);
    let dispersion = spread / mean;
    let (_, p_last) = &crossings[crossings.len() - 1];
    let (_, p_prev) = &crossings[crossings.len() - 2];
    let gap = p_last.iter().zip(p_prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let closure = gap / inf_norm(p_last).max(1e-12);
    diagnostics.period_dispersion = Some(dispersion);
    diagnostics.closure_residual = Some(closure);
    if !(mean > 0.0 && dispersion <= opts.period_dispersion && closure <= opts.closure_tol) {
        return Ok(undecided(diagnostics));
    }

    let t_from = crossings[crossings.len() - 2].0;
    let t_to = crossings[crossings.len() - 1].0;
    let cycle_states: Vec<Vec<f64>> = times
        .iter()
        .zip(states)
        .filter(|(t, _)| **t >= t_from && **t <= t_to)
        .map(|(_, x)| x.clone())
        .collect();
    let dim = last.len();
    let mut state_min = vec![f64::INFINITY; dim];
    let mut state_max = vec![f64::NEG_INFINITY; dim];
    for x in &cycle_states {
        for i in 0..dim {
            state_min[i] = state_min[i].min(x[i]);
            state_max[i] = state_max[i].max(x[i]);
        }
    }
    Ok(AttractorReport {
        kind: AttractorKind::LimitCycle,
        equilibrium: None,
        cycle: Some(CycleSummary {
            period: mean,
            returns: crossings.len(),
            section_point: section.point,
            section_normal: section.normal,
            samples: cycle_states,
            state_min,
            state_max,
        }),
        diagnostics,
    })
}

fn inf_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

struct Section {
    point: Vec<f64>,
    normal: Vec<f64>,
    crossings: Vec<(f64, Vec<f64>)>,
}

fn poincare_returns(times: &[f64], states: &[Vec<f64>], derivs: &[Vec<f64>]) -> Option<Section> {
    let n = states[0].len();
    let span = times[times.len() - 1] - times[0];
    if n == 0 || span <= 0.0 {
        return None;
    }
    // time-weighted mean and covariance (trapezoid rule)
    let weights: Vec<f64> = (0..times.len())
        .map(|i| {
            let left = if i > 0 { times[i] - times[i - 1] } else { 0.0 };
            let right = if i + 1 < times.len() { times[i + 1] - times[i] } else { 0.0 };
            0.5 * (left + right) / span
        })
        .collect();
    let mut mean = DVector::zeros(n);
    for (w, x) in weights.iter().zip(states) {
        mean += DVector::from_column_slice(x) * *w;
    }
    let mut cov = DMatrix::zeros(n, n);
    for (w, x) in weights.iter().zip(states) {
        let d = DVector::from_column_slice(x) - &mean;
        cov += &d * d.transpose() * *w;
    }
    let eig = cov.symmetric_eigen();
    let (top, lead) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if *lead <= 0.0 {
        return None;
    }
    let normal = eig.eigenvectors.column(top).into_owned();
    let g = |x: &[f64]| -> f64 { (0..n).map(|i| normal[i] * (x[i] - mean[i])).sum() };
    let gd = |v: &[f64]| -> f64 { (0..n).map(|i| normal[i] * v[i]).sum() };

    let mut crossings = Vec::new();
    for i in 0..times.len() - 1 {
        let (g0, g1) = (g(&states[i]), g(&states[i + 1]));
        if !(g0 < 0.0 && g1 >= 0.0) {
            continue;
        }
        let h = times[i + 1] - times[i];
        let interp = |tau: f64, y0: f64, y1: f64, d0: f64, d1: f64| -> f64 {
            // cubic Hermite on the unit interval
            let t2 = tau * tau;
            let t3 = t2 * tau;
            (2.0 * t3 - 3.0 * t2 + 1.0) * y0
                + (t3 - 2.0 * t2 + tau) * h * d0
                + (-2.0 * t3 + 3.0 * t2) * y1
                + (t3 - t2) * h * d1
        };
        let (lo_tau, hi_tau) = if derivs.is_empty() {
            let tau = g0 / (g0 - g1);
            (tau, tau)
        } else {
            let (d0, d1) = (gd(&derivs[i]), gd(&derivs[i + 1]));
            let mut lo = 0.0;
            let mut hi = 1.0;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if interp(mid, g0, g1, d0, d1) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            (lo, hi)
        };
        let tau = 0.5 * (lo_tau + hi_tau);
        let point: Vec<f64> = (0..n)
            .map(|k| {
                if derivs.is_empty() {
                    states[i][k] + tau * (states[i + 1][k] - states[i][k])
                } else {
                    interp(tau, states[i][k], states[i + 1][k], derivs[i][k], derivs[i + 1][k])
                }
            })
            .collect();
        crossings.push((times[i] + tau * h, point));
    }
    Some(Section {
        point: mean.as_slice().to_vec(),
        normal: normal.as_slice().to_vec(),
        crossings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampled(f: impl Fn(f64) -> Vec<f64>, t_end: f64, n: usize) -> Trajectory {
        let times: Vec<f64> = (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect();
        let states = times.iter().map(|&t| f(t)).collect();
        Trajectory::from_samples(times, states).unwrap()
    }

    #[test]
    fn constant_is_equilibrium() {
        let traj = sampled(|_| vec![2.0, 0.1], 10.0, 500);
        let r = classify_trajectory(&traj, 0.5).unwrap();
        assert_eq!(r.kind, AttractorKind::Equilibrium);
        assert_eq!(r.equilibrium.unwrap(), vec![2.0, 0.1]);
    }

    #[test]
    fn sinusoid_is_limit_cycle() {
        let w = 0.93;
        let traj = sampled(|t| vec![2.0 + (w * t).cos(), 1.0 + 0.5 * (w * t).sin()], 200.0, 20000);
        let r = classify_trajectory(&traj, 0.5).unwrap();
        assert_eq!(r.kind, AttractorKind::LimitCycle);
        let period = r.period().unwrap();
        assert!((period - 2.0 * std::f64::consts::PI / w).abs() < 1e-3);
    }

    #[test]
    fn decaying_spiral_is_not_a_cycle() {
        let traj = sampled(
            |t| vec![2.0 + (-0.01 * t).exp() * t.cos(), 1.0 + (-0.01 * t).exp() * t.sin()],
            100.0,
            5000,
        );
        let r = classify_trajectory(&traj, 0.5).unwrap();
        assert_eq!(r.kind, AttractorKind::Undecided);
    }

    #[test]
    fn short_window_is_insufficient() {
        let traj = sampled(|t| vec![t], 1.0, 20);
        assert!(matches!(
            classify_trajectory(&traj, 0.5),
            Err(SimError::InsufficientData(_))
        ));
    }
}
