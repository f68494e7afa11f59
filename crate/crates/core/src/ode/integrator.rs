//! Dormand-Prince 5(4) with embedded error control and FSAL.

use nalgebra::DVector;

use crate::error::SimError;
use crate::models::SystemModel;
use crate::ode::{Trajectory, TrajectoryMeta, TOL_NEG};

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

// difference between the 5th and 4th order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest accepted step; bounds the spacing of output samples.
    pub max_step: f64,
    pub max_steps: usize,
}

impl IntegratorSettings {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: 0.05,
            max_steps: 5_000_000,
        }
    }
}

enum StepOutcome {
    Accepted {
        y: DVector<f64>,
        f: DVector<f64>,
        err: f64,
    },
    Rejected {
        err: f64,
    },
    /// A stage left the model's domain; retry with a smaller step.
    Domain(crate::error::ModelError),
}

struct Stepper<'a, M: SystemModel + ?Sized> {
    model: &'a M,
    settings: IntegratorSettings,
    k: Vec<DVector<f64>>,
}

impl<M: SystemModel + ?Sized> Stepper<'_, M> {
    fn eval(&self, y: &DVector<f64>) -> Result<DVector<f64>, crate::error::ModelError> {
        self.model.vector_field(y.as_slice())
    }

    fn error_norm(&self, y: &DVector<f64>, y_new: &DVector<f64>, err: &DVector<f64>) -> f64 {
        let s = &self.settings;
        let n = y.len().max(1) as f64;
        let sum: f64 = (0..y.len())
            .map(|i| {
                let sc = s.abs_tol + s.rel_tol * y[i].abs().max(y_new[i].abs());
                (err[i] / sc).powi(2)
            })
            .sum();
        (sum / n).sqrt()
    }

    fn attempt(&mut self, y: &DVector<f64>, f0: &DVector<f64>, h: f64) -> StepOutcome {
        self.k[0].copy_from(f0);
        for stage in 1..7 {
            let mut ys = y.clone();
            for (j, a) in A[stage].iter().enumerate().take(stage) {
                if *a != 0.0 {
                    ys.axpy(h * a, &self.k[j], 1.0);
                }
            }
            match self.eval(&ys) {
                Ok(v) => self.k[stage] = v,
                Err(e) => return StepOutcome::Domain(e),
            }
            if stage == 6 {
                // FSAL: the last stage is evaluated at the 5th-order solution
                let mut err = DVector::zeros(y.len());
                for (j, e) in E.iter().enumerate() {
                    if *e != 0.0 {
                        err.axpy(h * e, &self.k[j], 1.0);
                    }
                }
                let norm = self.error_norm(y, &ys, &err);
                if norm <= 1.0 {
                    return StepOutcome::Accepted {
                        y: ys,
                        f: self.k[6].clone(),
                        err: norm,
                    };
                }
                return StepOutcome::Rejected { err: norm };
            }
        }
        unreachable!()
    }
}

fn initial_step<M: SystemModel + ?Sized>(
    model: &M,
    y0: &DVector<f64>,
    f0: &DVector<f64>,
    s: &IntegratorSettings,
    span: f64,
) -> f64 {
    let scale = |i: usize| s.abs_tol + s.rel_tol * y0[i].abs();
    let rms = |v: &DVector<f64>| {
        let n = v.len().max(1) as f64;
        ((0..v.len()).map(|i| (v[i] / scale(i)).powi(2)).sum::<f64>() / n).sqrt()
    };
    let d0 = rms(y0);
    let d1 = rms(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(s.max_step).min(span);
    let y1 = y0 + f0 * h0;
    let d2 = match model.vector_field(y1.as_slice()) {
        Ok(f1) => rms(&(f1 - f0)) / h0,
        Err(_) => return h0,
    };
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    (100.0 * h0).min(h1).min(s.max_step).min(span)
}

/// Integrate `model` from `x0` over `[0, t_end]`.
///
/// For models living in the nonnegative orthant, components that undershoot zero
/// by less than [`TOL_NEG`] are projected back onto the boundary; larger
/// undershoots are retried with smaller steps and reported as a fault if the step
/// size underflows.
pub fn integrate<M: SystemModel + ?Sized>(
    model: &M,
    x0: &[f64],
    t_end: f64,
    settings: &IntegratorSettings,
) -> Result<Trajectory, SimError> {
    let n = model.dim();
    if x0.len() != n {
        return Err(SimError::InvalidRequest(format!(
            "initial state has dimension {}, model has {n}",
            x0.len()
        )));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(SimError::InvalidRequest(format!("t_end must be positive, got {t_end}")));
    }
    if !(settings.rel_tol > 0.0 && settings.abs_tol > 0.0 && settings.max_step > 0.0) {
        return Err(SimError::InvalidRequest("tolerances and max_step must be positive".into()));
    }
    if model.nonnegative() {
        if let Some((index, &value)) = x0.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(SimError::OrthantViolation { t: 0.0, index, value });
        }
    }

    let mut y = DVector::from_column_slice(x0);
    let mut f = model
        .vector_field(x0)
        .map_err(|source| SimError::Model { t: 0.0, source })?;
    let mut t = 0.0;
    let mut h = initial_step(model, &y, &f, settings, t_end);

    let mut stepper = Stepper {
        model,
        settings: *settings,
        k: vec![DVector::zeros(n); 7],
    };
    let mut times = vec![0.0];
    let mut states = vec![x0.to_vec()];
    let mut derivs = vec![f.as_slice().to_vec()];
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut last_rejected = false;

    while t < t_end {
        if accepted + rejected >= settings.max_steps {
            return Err(SimError::Stiffness { t, h });
        }
        let h_min = 1e-12 * t.abs().max(1.0);
        if h < h_min {
            return Err(SimError::Stiffness { t, h });
        }
        let last = t + h >= t_end;
        let h_try = if last { t_end - t } else { h };

        match stepper.attempt(&y, &f, h_try) {
            StepOutcome::Accepted { y: mut y_new, f: mut f_new, err } => {
                if model.nonnegative() {
                    let worst = y_new
                        .iter()
                        .enumerate()
                        .filter(|(_, v)| **v < 0.0)
                        .min_by(|a, b| a.1.total_cmp(b.1))
                        .map(|(i, v)| (i, *v));
                    if let Some((index, value)) = worst {
                        if value < -TOL_NEG {
                            rejected += 1;
                            last_rejected = true;
                            h = 0.5 * h_try;
                            if h < h_min {
                                return Err(SimError::OrthantViolation {
                                    t: t + h_try,
                                    index,
                                    value,
                                });
                            }
                            continue;
                        }
                        y_new.iter_mut().for_each(|v| *v = v.max(0.0));
                        f_new = model
                            .vector_field(y_new.as_slice())
                            .map_err(|source| SimError::Model { t: t + h_try, source })?;
                    }
                }
                t = if last { t_end } else { t + h_try };
                y = y_new;
                f = f_new;
                accepted += 1;
                times.push(t);
                states.push(y.as_slice().to_vec());
                derivs.push(f.as_slice().to_vec());

                let mut factor = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
                factor = factor.clamp(0.2, 5.0);
                if last_rejected {
                    factor = factor.min(1.0);
                }
                last_rejected = false;
                h = (h_try * factor).min(settings.max_step);
            }
            StepOutcome::Rejected { err } => {
                rejected += 1;
                last_rejected = true;
                h = h_try * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            }
            StepOutcome::Domain(source) => {
                rejected += 1;
                last_rejected = true;
                h = 0.5 * h_try;
                if h < h_min {
                    return Err(SimError::Model { t, source });
                }
            }
        }
    }

    Ok(Trajectory {
        times,
        states,
        derivatives: derivs,
        meta: TrajectoryMeta {
            model_tag: model.tag(),
            rel_tol: settings.rel_tol,
            abs_tol: settings.abs_tol,
            max_step: settings.max_step,
            accepted_steps: accepted,
            rejected_steps: rejected,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::LinearModel;
    use nalgebra::DMatrix;

    #[test]
    fn exponential_decay() {
        let m = LinearModel::new(DMatrix::from_element(1, 1, -1.0));
        let s = IntegratorSettings::new(1e-10, 1e-12);
        let traj = integrate(&m, &[1.0], 2.0, &s).unwrap();
        let last = traj.last_state().unwrap()[0];
        assert!((last - (-2.0f64).exp()).abs() < 1e-9);
        assert_eq!(*traj.times.last().unwrap(), 2.0);
        assert!(traj.times.windows(2).all(|w| w[1] - w[0] <= s.max_step * (1.0 + 1e-12)));
    }

    #[test]
    fn rejects_bad_requests() {
        let m = LinearModel::new(DMatrix::from_element(1, 1, -1.0));
        let s = IntegratorSettings::default();
        assert!(integrate(&m, &[1.0, 2.0], 1.0, &s).is_err());
        assert!(integrate(&m, &[1.0], 0.0, &s).is_err());
    }
}
