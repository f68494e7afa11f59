//! Hill saturation `theta1(u) = u^N / (k1 + k2 u^N)` and its slope.

use crate::error::ModelError;
use crate::interval::Interval;
use crate::models::params::HillParams;

/// Value and first derivative of the Hill map at `u >= 0`.
pub fn hill_value_and_derivative(u: f64, p: &HillParams) -> Result<(f64, f64), ModelError> {
    if u < 0.0 || u.is_nan() {
        return Err(ModelError::NegativeState {
            what: "Hill input",
            index: 0,
            value: u,
        });
    }
    Ok((p.value(u), p.slope(u)))
}

impl HillParams {
    pub fn value(&self, u: f64) -> f64 {
        let un = u.powi(self.n_exp as i32);
        un / (self.k1 + self.k2 * un)
    }

    /// `N k1 u^(N-1) / (k1 + k2 u^N)^2`
    pub fn slope(&self, u: f64) -> f64 {
        let n = self.n_exp as i32;
        let un = u.powi(n);
        let den = self.k1 + self.k2 * un;
        f64::from(self.n_exp) * self.k1 * u.powi(n - 1) / (den * den)
    }

    /// Saturation level `1/k2` (infinite when `k2 = 0`).
    pub fn ceiling(&self) -> f64 {
        if self.k2 > 0.0 {
            1.0 / self.k2
        } else {
            f64::INFINITY
        }
    }

    /// Input at which the slope peaks, when the peak is interior to `u > 0`.
    ///
    /// Setting the derivative of the slope to zero gives
    /// `u^N = (N - 1) k1 / ((N + 1) k2)`.
    pub fn peak_input(&self) -> Option<f64> {
        if self.n_exp < 2 || self.k2 == 0.0 {
            return None;
        }
        let n = f64::from(self.n_exp);
        let un = (n - 1.0) * self.k1 / ((n + 1.0) * self.k2);
        Some(un.powf(1.0 / n))
    }

    /// `(argmax, max)` of the slope over `u >= 0`. Unbounded when `k2 = 0` and `N >= 2`.
    pub fn max_slope(&self) -> (f64, f64) {
        match (self.peak_input(), self.n_exp) {
            (Some(u), _) => (u, self.slope(u)),
            (None, 1) => (0.0, 1.0 / self.k1),
            (None, _) => (f64::INFINITY, f64::INFINITY),
        }
    }

    /// Exact range of the slope over `u` in `[lo, hi]` (with `lo >= 0`).
    ///
    /// The slope is unimodal for `N >= 2` and monotone for `N = 1` or `k2 = 0`,
    /// so its extremes sit at the endpoints or at the interior peak.
    pub fn slope_range(&self, u: Interval) -> Interval {
        let a = self.slope(u.lo.max(0.0));
        let b = self.slope(u.hi.max(0.0));
        let mut lo = a.min(b);
        let mut hi = a.max(b);
        if let Some(peak) = self.peak_input() {
            if u.contains(peak) {
                let s = self.slope(peak);
                hi = hi.max(s);
                lo = lo.min(s);
            }
        }
        Interval { lo, hi }
    }

    /// Input producing `target`, if `0 <= target < 1/k2`.
    pub fn inverse(&self, target: f64) -> Option<f64> {
        if target < 0.0 || target >= self.ceiling() {
            return None;
        }
        let un = self.k1 * target / (1.0 - self.k2 * target);
        Some(un.powf(1.0 / f64::from(self.n_exp)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hill_a() -> HillParams {
        HillParams::new(1.0, 0.2, 1).unwrap()
    }

    fn hill_b() -> HillParams {
        HillParams::new(0.1, 1.0, 2).unwrap()
    }

    #[test]
    fn vanishes_at_origin_for_higher_coefficients() {
        assert_eq!(hill_value_and_derivative(0.0, &hill_b()).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn rejects_negative_input() {
        assert!(hill_value_and_derivative(-1e-3, &hill_a()).is_err());
    }

    #[test]
    fn slope_peak_locations() {
        let (u, s) = hill_a().max_slope();
        assert_eq!(u, 0.0);
        assert!((s - 1.0).abs() < 1e-15);

        let (u, s) = hill_b().max_slope();
        assert!((u - (0.1f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(s > 2.0);
    }

    #[test]
    fn slope_range_covers_interior_peak() {
        let h = hill_b();
        let r = h.slope_range(Interval::new(0.05, 0.5).unwrap());
        assert!((r.hi - h.max_slope().1).abs() < 1e-12);
        assert!((r.lo - h.slope(0.5).min(h.slope(0.05))).abs() < 1e-15);
    }

    #[test]
    fn inverse_round_trips() {
        for h in [hill_a(), hill_b(), HillParams::new(0.5, 0.0, 3).unwrap()] {
            for u in [0.0, 0.1, 0.7, 2.5] {
                let y = h.value(u);
                let back = h.inverse(y).unwrap();
                assert!((back - u).abs() < 1e-10, "{h:?} u={u} back={back}");
            }
        }
        assert!(hill_b().inverse(1.0).is_none());
    }
}
