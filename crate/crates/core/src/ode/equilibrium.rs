use nalgebra::DVector;

use crate::error::SimError;
use crate::models::SystemModel;

const MAX_ITERATIONS: usize = 100;

/// Damped Newton iteration on `f(xi) = 0` started from `guess`.
///
/// Converges when `|f|_inf <= 1e-12 (1 + |xi|_inf)`. Steps are halved until the
/// residual decreases and, for orthant models, the iterate stays nonnegative.
pub fn refine_equilibrium<M: SystemModel + ?Sized>(model: &M, guess: &[f64]) -> Result<Vec<f64>, SimError> {
    let n = model.dim();
    if guess.len() != n {
        return Err(SimError::InvalidRequest(format!(
            "guess has dimension {}, model has {n}",
            guess.len()
        )));
    }
    let eval = |x: &DVector<f64>| {
        model
            .vector_field(x.as_slice())
            .map_err(|source| SimError::Model { t: f64::NAN, source })
    };
    let mut x = DVector::from_column_slice(guess);
    let mut f = eval(&x)?;
    let mut residual = f.amax();
    for _ in 0..MAX_ITERATIONS {
        if residual <= 1e-12 * (1.0 + x.amax()) {
            return Ok(x.as_slice().to_vec());
        }
        let jac = model.jacobian(x.as_slice());
        let lu = jac.clone().lu();
        let u = lu.u();
        let pivots: Vec<f64> = (0..n).map(|i| u[(i, i)].abs()).collect();
        let biggest = pivots.iter().cloned().fold(0.0, f64::max);
        let smallest = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
        if biggest == 0.0 || smallest <= 1e-14 * biggest {
            return Err(SimError::SingularJacobian(x.as_slice().to_vec()));
        }
        let step = lu
            .solve(&(-&f))
            .ok_or_else(|| SimError::SingularJacobian(x.as_slice().to_vec()))?;

        let mut alpha = 1.0;
        let mut improved = None;
        for _ in 0..40 {
            let cand = &x + &step * alpha;
            let admissible = !model.nonnegative() || cand.iter().all(|v| *v >= 0.0);
            if admissible {
                if let Ok(fc) = model.vector_field(cand.as_slice()) {
                    let rc = fc.amax();
                    if rc < residual || rc <= 1e-12 * (1.0 + cand.amax()) {
                        improved = Some((cand, fc, rc));
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        match improved {
            Some((cand, fc, rc)) => {
                x = cand;
                f = fc;
                residual = rc;
            }
            None => {
                return Err(SimError::NoConvergence {
                    iterations: MAX_ITERATIONS,
                    residual,
                })
            }
        }
    }
    if residual <= 1e-12 * (1.0 + x.amax()) {
        return Ok(x.as_slice().to_vec());
    }
    Err(SimError::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual,
    })
}
