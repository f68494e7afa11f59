//! `p`-dominance certificates: a symmetric `P` with `p` negative eigenvalues
//! satisfying `A^T P + P A + 2 lambda P <= -epsilon I` for every Jacobian `A`
//! over a region. Solutions are found by maximizing the margin under the
//! normalization `-I <= P <= I`; the degree `p` is read off the solution.

mod certificate;
mod sdp;

use std::fmt::Display;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::DominanceError;
use crate::models::SystemModel;
use crate::regions::{Region, RegionVertex};

pub use certificate::{table1, CertificateMeta, DominanceCertificate};
pub use sdp::{maximize_margin, SdpOptions, SdpSolution};

/// Eigenvalues of `P` within this fraction of `|P|` count as zero.
pub const ZERO_TOL: f64 = 1e-9;

/// `A^T P + P A + 2 lambda P`.
pub fn lmi_residual(a: &DMatrix<f64>, p: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    a.transpose() * p + p * a + p * (2.0 * lambda)
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.max()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InertiaTriple {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

pub fn inertia(p: &DMatrix<f64>) -> InertiaTriple {
    inertia_with_tol(p, ZERO_TOL)
}

/// Inertia of the symmetric part of `p`, with eigenvalues below `rel_tol * |P|_2` treated as zero.
pub fn inertia_with_tol(p: &DMatrix<f64>, rel_tol: f64) -> InertiaTriple {
    let sym = (p + p.transpose()) * 0.5;
    let eig = sym.symmetric_eigen().eigenvalues;
    let scale = eig.amax();
    let tol = rel_tol * scale;
    InertiaTriple {
        negative: eig.iter().filter(|e| **e < -tol).count(),
        zero: eig.iter().filter(|e| e.abs() <= tol).count(),
        positive: eig.iter().filter(|e| **e > tol).count(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceOptions {
    /// Required margin; defaults to `1e-6` times the largest vertex Jacobian norm.
    pub epsilon: Option<f64>,
    pub expected_p: Option<usize>,
    /// Grid resolution of the interior spot-check.
    pub sample_density: usize,
    pub sdp: SdpOptions,
}

impl Default for DominanceOptions {
    fn default() -> Self {
        Self {
            epsilon: None,
            expected_p: None,
            sample_density: 20,
            sdp: SdpOptions::default(),
        }
    }
}

fn jacobians<M: SystemModel + ?Sized>(model: &M, points: &[RegionVertex]) -> Vec<DMatrix<f64>> {
    points
        .par_iter()
        .map(|v| model.jacobian_pinned(&v.xi, &v.pins))
        .collect()
}

fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    a.clone().singular_values().max()
}

/// Certificate over the region with the sequestration rate at its nominal value.
pub fn solve_dominance_lmi<M: SystemModel + ?Sized>(
    model: &M,
    region: &Region,
    lambda: f64,
    opts: &DominanceOptions,
) -> Result<DominanceCertificate, DominanceError> {
    let mut nominal = region.clone();
    nominal.param_box.eta = None;
    solve_over(model, &nominal, lambda, opts, false)
}

/// Certificate uniform over the region and every parameter in its parameter box.
pub fn solve_robust_dominance<M: SystemModel + ?Sized>(
    model: &M,
    region: &Region,
    lambda: f64,
    opts: &DominanceOptions,
) -> Result<DominanceCertificate, DominanceError> {
    solve_over(model, region, lambda, opts, true)
}

fn solve_over<M: SystemModel + ?Sized>(
    model: &M,
    region: &Region,
    lambda: f64,
    opts: &DominanceOptions,
    robust: bool,
) -> Result<DominanceCertificate, DominanceError> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(DominanceError::Dimension(format!("lambda must be nonnegative, got {lambda}")));
    }
    let region = region.clone().bind_slope(model)?;
    let vertices = region.vertices(model)?;
    let mats = jacobians(model, &vertices);
    let norm = mats.iter().map(spectral_norm).fold(0.0, f64::max);
    let target = opts.epsilon.unwrap_or(1e-6 * norm.max(f64::MIN_POSITIVE));
    let sol = maximize_margin(&mats, lambda, target, &opts.sdp)?;
    if !sol.feasible {
        let (worst_vertex, _) = worst_residual(&mats, &sol.p, lambda);
        return Err(DominanceError::Infeasible {
            best_margin: sol.t.min(sol.upper_bound),
            target,
            worst_vertex,
            worst_point: vertices[worst_vertex].xi.clone(),
        });
    }
    let inert = inertia(&sol.p);
    if inert.zero > 0 {
        return Err(DominanceError::Degenerate { tol: ZERO_TOL });
    }
    if let Some(expected) = opts.expected_p {
        if inert.negative != expected {
            return Err(DominanceError::DegreeMismatch {
                expected,
                found: inert.negative,
            });
        }
    }
    let report = verify_certificate(model, &region, &sol.p, lambda, inert.negative, opts.sample_density, None)?;
    if !report.passed {
        return Err(DominanceError::Verification(report.reasons.join("; ")));
    }
    Ok(DominanceCertificate {
        p: inert.negative,
        lambda,
        epsilon: -report.residual_margin,
        matrix: sol.p,
        region: Some(region),
        residual_margin: report.residual_margin,
        checked_points: report.checked_points,
        meta: CertificateMeta {
            model: model.tag(),
            source: "solver".into(),
            robust,
            solver_upper_bound: Some(sol.upper_bound),
            ..CertificateMeta::default()
        },
    })
}

fn worst_residual(mats: &[DMatrix<f64>], p: &DMatrix<f64>, lambda: f64) -> (usize, f64) {
    mats.par_iter()
        .map(|a| max_eigenvalue(&lmi_residual(a, p, lambda)))
        .enumerate()
        .reduce(|| (0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Vertex,
    Grid,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub kind: PointKind,
    pub index: usize,
    pub xi: Vec<f64>,
    pub eta: Option<f64>,
    pub slope: Option<f64>,
    pub max_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub passed: bool,
    pub expected_p: usize,
    pub inertia: InertiaTriple,
    pub symmetry_defect: f64,
    pub lambda: f64,
    /// Largest residual eigenvalue over every checked point.
    pub residual_margin: f64,
    /// `-residual_margin` when the check passes.
    pub epsilon: Option<f64>,
    pub checked_points: usize,
    pub vertex_count: usize,
    pub worst: Option<Witness>,
    pub reasons: Vec<String>,
}

/// Random extra points for [`verify_certificate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSamples {
    pub count: usize,
    pub seed: u64,
}

/// Check a candidate `P` without solving anything: inertia, then the residual at
/// every region vertex, on a `sample_density^2` grid inside the polygon with the
/// model's own Jacobian, and at optional random points.
pub fn verify_certificate<M: SystemModel + ?Sized>(
    model: &M,
    region: &Region,
    p: &DMatrix<f64>,
    lambda: f64,
    p_degree: usize,
    sample_density: usize,
    random: Option<RandomSamples>,
) -> Result<VerificationReport, DominanceError> {
    let n = model.dim();
    if p.nrows() != n || p.ncols() != n {
        return Err(DominanceError::Dimension(format!(
            "P is {}x{}, model has dimension {n}",
            p.nrows(),
            p.ncols()
        )));
    }
    let region = region.clone().bind_slope(model)?;
    let mut reasons = Vec::new();
    let scale = p.amax().max(f64::MIN_POSITIVE);
    let symmetry_defect = (p - p.transpose()).amax();
    if symmetry_defect > 1e-12 * scale.max(1.0) {
        reasons.push(format!("P is not symmetric (defect {symmetry_defect:e})"));
    }
    let sym = (p + p.transpose()) * 0.5;
    let inert = inertia(&sym);
    let expected = InertiaTriple {
        negative: p_degree,
        zero: 0,
        positive: n.saturating_sub(p_degree),
    };
    if p_degree > n || inert != expected {
        reasons.push(format!(
            "inertia of P is ({}, {}, {}), expected ({}, 0, {})",
            inert.negative,
            inert.zero,
            inert.positive,
            p_degree,
            n.saturating_sub(p_degree)
        ));
    }

    let vertices = region.vertices(model)?;
    let grid = region.sample_points(model, sample_density)?;
    let extra = match random {
        Some(r) => {
            let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
            region.random_points(model, r.count, &mut rng)?
        }
        None => Vec::new(),
    };
    let labelled: Vec<(PointKind, usize, &RegionVertex)> = vertices
        .iter()
        .enumerate()
        .map(|(i, v)| (PointKind::Vertex, i, v))
        .chain(grid.iter().enumerate().map(|(i, v)| (PointKind::Grid, i, v)))
        .chain(extra.iter().enumerate().map(|(i, v)| (PointKind::Random, i, v)))
        .collect();
    let worst = labelled
        .par_iter()
        .map(|(kind, i, v)| {
            let a = model.jacobian_pinned(&v.xi, &v.pins);
            (*kind, *i, *v, max_eigenvalue(&lmi_residual(&a, &sym, lambda)))
        })
        .reduce_with(|a, b| if b.3 > a.3 || (b.3 == a.3 && (b.0 as u8, b.1) < (a.0 as u8, a.1)) { b } else { a });
    let (residual_margin, witness) = match worst {
        Some((kind, index, v, m)) => (
            m,
            Some(Witness {
                kind,
                index,
                xi: v.xi.clone(),
                eta: v.pins.eta,
                slope: v.pins.slope,
                max_eigenvalue: m,
            }),
        ),
        None => (f64::NEG_INFINITY, None),
    };
    if residual_margin >= 0.0 {
        let w = witness.as_ref().expect("a nonnegative margin comes from a point");
        reasons.push(format!(
            "residual has eigenvalue {:e} >= 0 at {:?} point {} (xi = {:?})",
            residual_margin, w.kind, w.index, w.xi
        ));
    }
    let passed = reasons.is_empty();
    Ok(VerificationReport {
        passed,
        expected_p: p_degree,
        inertia: inert,
        symmetry_defect,
        lambda,
        residual_margin,
        epsilon: passed.then_some(-residual_margin),
        checked_points: labelled.len(),
        vertex_count: vertices.len(),
        worst: witness,
        reasons,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AttractorClass {
    /// At most one fixed point in the region, attracting every bounded solution.
    UniqueFixedPoint,
    /// Every bounded solution converges to a fixed point.
    FixedPointConvergence,
    /// Bounded solutions converge to fixed points, cycles, or cycles of fixed points.
    SimpleAttractor,
    /// Every equilibrium in the region is unstable, so bounded solutions approach a periodic orbit.
    LimitCycle,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub class: AttractorClass,
    pub p: usize,
    pub equilibria: usize,
    pub unstable_equilibria: usize,
}

/// Attractor classes implied by a certificate, given the equilibria in the
/// region and their Jacobian spectra.
pub fn classify(
    certificate: &DominanceCertificate,
    equilibria: &[(Vec<f64>, Vec<Complex64>)],
) -> Result<Classification, DominanceError> {
    let unstable = equilibria
        .iter()
        .filter(|(_, eigs)| eigs.iter().any(|e| e.re > 0.0))
        .count();
    let class = match certificate.p {
        0 => {
            for (i, (a, _)) in equilibria.iter().enumerate() {
                for (b, _) in &equilibria[i + 1..] {
                    let scale = a.iter().chain(b.iter()).fold(1.0f64, |m, v| m.max(v.abs()));
                    let gap = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                    if gap > 1e-6 * scale {
                        return Err(DominanceError::Contradiction(a.clone(), b.clone()));
                    }
                }
            }
            AttractorClass::UniqueFixedPoint
        }
        1 => AttractorClass::FixedPointConvergence,
        2 if unstable == equilibria.len() => AttractorClass::LimitCycle,
        2 => AttractorClass::SimpleAttractor,
        p => return Err(DominanceError::UnsupportedDegree(p)),
    };
    Ok(Classification {
        class,
        p: certificate.p,
        equilibria: equilibria.len(),
        unstable_equilibria: unstable,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FallbackAttempt {
    pub margin: f64,
    pub outcome: String,
}

#[derive(Debug, Clone)]
pub struct Fallback<T> {
    pub value: T,
    pub margin: f64,
    pub attempts: Vec<FallbackAttempt>,
}

#[derive(Debug)]
pub struct FallbackFailure<E> {
    pub error: E,
    pub attempts: Vec<FallbackAttempt>,
}

/// Run `attempt` with `margin`, halving it up to `halvings` times until it succeeds.
pub fn margin_fallback<T, E: Display>(
    margin: f64,
    halvings: usize,
    mut attempt: impl FnMut(f64) -> Result<T, E>,
) -> Result<Fallback<T>, FallbackFailure<E>> {
    let mut attempts = Vec::new();
    let mut m = margin;
    for i in 0..=halvings {
        match attempt(m) {
            Ok(value) => {
                attempts.push(FallbackAttempt {
                    margin: m,
                    outcome: "ok".into(),
                });
                return Ok(Fallback {
                    value,
                    margin: m,
                    attempts,
                });
            }
            Err(error) => {
                attempts.push(FallbackAttempt {
                    margin: m,
                    outcome: error.to_string(),
                });
                if i == halvings {
                    return Err(FallbackFailure { error, attempts });
                }
            }
        }
        m *= 0.5;
    }
    unreachable!("the loop returns on its last iteration")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polygon;
    use crate::models::LinearModel;

    fn point_region(n: usize) -> Region {
        Region::from_polygon(Polygon::hull(&[[0.0, 0.0]]).unwrap(), n).unwrap()
    }

    #[test]
    fn residual_formula() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let p = DMatrix::identity(2, 2);
        assert_eq!(lmi_residual(&a, &p, 0.5), DMatrix::from_row_slice(2, 2, &[3.0, 5.0, 5.0, 9.0]));
    }

    #[test]
    fn inertia_counts() {
        let p = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-2.0, 0.0, 3.0, 4.0]));
        assert_eq!(
            inertia(&p),
            InertiaTriple {
                negative: 1,
                zero: 1,
                positive: 2
            }
        );
    }

    #[test]
    fn linear_degrees_match_eigenvalues() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, -0.5, -2.0, -3.0]));
        let m = LinearModel::new(a);
        for (lambda, p) in [(0.0, 1), (1.0, 2), (2.5, 3), (3.5, 4)] {
            let c = solve_dominance_lmi(&m, &point_region(4), lambda, &DominanceOptions::default()).unwrap();
            assert_eq!(c.p, p, "lambda = {lambda}");
            assert!(c.residual_margin <= -c.epsilon * (1.0 - 1e-12));
        }
        assert!(matches!(
            solve_dominance_lmi(&m, &point_region(4), 2.0, &DominanceOptions::default()),
            Err(DominanceError::Infeasible { .. })
        ));
    }

    #[test]
    fn scaled_certificate_scales_margin() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 3.0, -3.0, -1.0]);
        let m = LinearModel::new(a);
        let c = solve_dominance_lmi(&m, &point_region(2), 0.0, &DominanceOptions::default()).unwrap();
        let r1 = verify_certificate(&m, &point_region(2), &c.matrix, 0.0, 0, 2, None).unwrap();
        let r2 = verify_certificate(&m, &point_region(2), &(&c.matrix * 7.0), 0.0, 0, 2, None).unwrap();
        assert!(r1.passed && r2.passed);
        assert!((r2.residual_margin - 7.0 * r1.residual_margin).abs() <= 1e-12 * r2.residual_margin.abs());
    }

    #[test]
    fn tampered_matrix_fails_with_witness() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
        let m = LinearModel::new(a);
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let r = verify_certificate(&m, &point_region(2), &p, 0.0, 0, 2, None).unwrap();
        assert!(!r.passed);
        assert!(r.worst.is_some());
        assert!(!r.reasons.is_empty());
    }

    #[test]
    fn classification_rules() {
        let cert = |p| DominanceCertificate {
            p,
            lambda: 1.0,
            epsilon: 1.0,
            matrix: DMatrix::identity(2, 2),
            region: None,
            residual_margin: -1.0,
            checked_points: 1,
            meta: CertificateMeta::default(),
        };
        let unstable = (vec![0.5, 0.4], vec![Complex64::new(0.1, 1.0), Complex64::new(0.1, -1.0)]);
        let stable = (vec![0.6, 0.4], vec![Complex64::new(-0.1, 1.0), Complex64::new(-0.1, -1.0)]);
        assert_eq!(classify(&cert(2), std::slice::from_ref(&unstable)).unwrap().class, AttractorClass::LimitCycle);
        assert_eq!(
            classify(&cert(2), &[unstable.clone(), stable.clone()]).unwrap().class,
            AttractorClass::SimpleAttractor
        );
        assert!(matches!(
            classify(&cert(0), &[unstable, stable]),
            Err(DominanceError::Contradiction(..))
        ));
        assert!(matches!(classify(&cert(3), &[]), Err(DominanceError::UnsupportedDegree(3))));
    }

    #[test]
    fn fallback_halves_until_success() {
        let out = margin_fallback(1.0, 3, |m| if m < 0.3 { Ok(m) } else { Err("too wide") }).unwrap();
        assert_eq!(out.margin, 0.25);
        assert_eq!(out.attempts.len(), 3);
        let fail = margin_fallback(1.0, 1, |_| Err::<(), _>("never")).unwrap_err();
        assert_eq!(fail.attempts.len(), 2);
    }
}
