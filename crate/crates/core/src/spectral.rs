//! Frequency-domain and eigenvalue diagnostics along a trajectory or over a region:
//! eigenvalue splitting relative to `-lambda`, frozen transfer functions, Nyquist
//! loci on the shifted axis `s = -lambda + j omega`, and root loci.
//!
//! A frozen loop with `p` closed-loop eigenvalues right of `-lambda` and `q`
//! open-loop poles right of `-lambda` has a Nyquist locus that encircles the
//! critical point `p - q` times clockwise.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::SpectralError;
use crate::models::{hill_value_and_derivative, ControllerParams, FopPlantParams, HillParams, ParamPins, SystemModel};
use crate::ode::sig17;
use crate::regions::RegionVertex;

/// Eigenvalues closer than this to `Re = -lambda` make the split ambiguous.
pub const SPLIT_TOL: f64 = 1e-9;

/// Eigenvalues sorted by decreasing real part, then decreasing imaginary part.
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<Complex64> {
    let mut e: Vec<Complex64> = a.complex_eigenvalues().iter().copied().collect();
    e.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
    e
}

/// `(count with Re > -lambda, count with Re < -lambda)`.
pub fn split_count(eigs: &[Complex64], lambda: f64, tol: f64) -> Result<(usize, usize), SpectralError> {
    if let Some(e) = eigs.iter().find(|e| (e.re + lambda).abs() <= tol) {
        return Err(SpectralError::BoundarySplit {
            re: e.re,
            im: e.im,
            lambda,
            tol,
        });
    }
    let right = eigs.iter().filter(|e| e.re > -lambda).count();
    Ok((right, eigs.len() - right))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSample {
    pub xi: Vec<f64>,
    pub lambda: f64,
    pub eigenvalues: Vec<Complex64>,
    pub split: (usize, usize),
}

/// Eigenvalues of the closed-loop Jacobian at `xi`, split relative to `-lambda`.
pub fn spectrum<M: SystemModel + ?Sized>(model: &M, xi: &[f64], lambda: f64) -> Result<SpectrumSample, SpectralError> {
    spectrum_of(model.jacobian(xi), xi, lambda)
}

/// As [`spectrum`], with the parameter values of a region vertex.
pub fn spectrum_at<M: SystemModel + ?Sized>(
    model: &M,
    vertex: &RegionVertex,
    lambda: f64,
) -> Result<SpectrumSample, SpectralError> {
    spectrum_of(model.jacobian_pinned(&vertex.xi, &vertex.pins), &vertex.xi, lambda)
}

fn spectrum_of(jac: DMatrix<f64>, xi: &[f64], lambda: f64) -> Result<SpectrumSample, SpectralError> {
    if xi.iter().any(|v| !v.is_finite()) || !lambda.is_finite() {
        return Err(SpectralError::InvalidRequest("state and lambda must be finite".into()));
    }
    let eigs = eigenvalues(&jac);
    let split = split_count(&eigs, lambda, SPLIT_TOL)?;
    Ok(SpectrumSample {
        xi: xi.to_vec(),
        lambda,
        eigenvalues: eigs,
        split,
    })
}

/// CSV with header `which_vertex,re_1,im_1,...,re_n,im_n`.
pub fn write_spectrum_csv<W: Write>(samples: &[SpectrumSample], mut w: W) -> io::Result<()> {
    let n = samples.first().map_or(0, |s| s.eigenvalues.len());
    write!(w, "which_vertex")?;
    for i in 1..=n {
        write!(w, ",re_{i},im_{i}")?;
    }
    writeln!(w)?;
    for (k, s) in samples.iter().enumerate() {
        write!(w, "{k}")?;
        for e in &s.eigenvalues {
            write!(w, ",{},{}", sig17(e.re), sig17(e.im))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// `theta1 theta2 eta k z1 / (s (s + gamma)^2 (s + eta (z1 + z2)))` for the
/// first-order production loop; with Hill actuation `theta1` becomes the slope
/// of the Hill map at `z1`.
pub fn frozen_transfer_function(
    z: [f64; 2],
    s: Complex64,
    cp: &ControllerParams,
    pp: &FopPlantParams,
    hill: Option<&HillParams>,
) -> Result<Complex64, SpectralError> {
    let actuation = match hill {
        Some(h) => hill_value_and_derivative(z[0], h)
            .map_err(|e| SpectralError::InvalidRequest(e.to_string()))?
            .1,
        None => pp.theta1,
    };
    let sum = cp.eta * (z[0] + z[1]);
    for pole in [0.0, -pp.gamma, -sum] {
        if (s - pole).norm() <= 1e-12 * pole.abs().max(1.0) {
            return Err(SpectralError::AtPole { re: s.re, im: s.im });
        }
    }
    let gain = actuation * pp.theta2 * cp.eta * pp.k * z[0];
    let g = s + pp.gamma;
    Ok(gain / (s * g * g * (s + sum)))
}

/// Open-loop matrix with its cut: the closed loop at gain `kappa` is
/// `a_open - kappa b c^T` and the transfer function is `c^T (sI - a_open)^{-1} b`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenLoop {
    pub a_open: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    /// State at which the loop was frozen.
    pub state: Vec<f64>,
}

impl FrozenLoop {
    pub fn new(a_open: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>) -> Result<Self, SpectralError> {
        let n = a_open.nrows();
        if !a_open.is_square() || b.len() != n || c.len() != n {
            return Err(SpectralError::InvalidRequest("loop matrices have inconsistent sizes".into()));
        }
        Ok(Self {
            a_open,
            b,
            c,
            state: Vec::new(),
        })
    }

    /// The model's own loop at `xi`; unit gain recovers the closed-loop Jacobian.
    pub fn from_model<M: SystemModel + ?Sized>(model: &M, xi: &[f64]) -> Result<Self, SpectralError> {
        Self::from_model_pinned(model, xi, &ParamPins::default())
    }

    /// As [`FrozenLoop::from_model`], with the parameter values of a region vertex.
    pub fn from_model_pinned<M: SystemModel + ?Sized>(
        model: &M,
        xi: &[f64],
        pins: &ParamPins,
    ) -> Result<Self, SpectralError> {
        let cut = model.loop_cut(xi).ok_or_else(|| SpectralError::NoLoop(model.tag()))?;
        let a_open = model.jacobian_pinned(xi, pins) + &cut.input_column * cut.output_gradient.transpose();
        Ok(Self {
            a_open,
            b: cut.input_column,
            c: cut.output_gradient,
            state: xi.to_vec(),
        })
    }

    /// Controller plus first-order production plant with unit couplings, so that
    /// `G(s) = eta z1 / (s (s + gamma)^2 (s + eta (z1 + z2)))`. The physical loop
    /// corresponds to gain `theta1 theta2 k` (see [`aif_loop_gain`]).
    pub fn aif_unit(z: [f64; 2], eta: f64, gamma: f64) -> Self {
        let a_open = DMatrix::from_row_slice(
            4,
            4,
            &[
                -eta * z[1], -eta * z[0], 0.0, 0.0, //
                -eta * z[1], -eta * z[0], 0.0, 0.0, //
                1.0, 0.0, -gamma, 0.0, //
                0.0, 0.0, 1.0, -gamma,
            ],
        );
        let mut b = DVector::zeros(4);
        b[1] = 1.0;
        let mut c = DVector::zeros(4);
        c[3] = -1.0;
        Self {
            a_open,
            b,
            c,
            state: z.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.a_open.nrows()
    }

    pub fn closed_loop(&self, gain: f64) -> DMatrix<f64> {
        &self.a_open - &self.b * self.c.transpose() * gain
    }

    pub fn open_loop_poles(&self) -> Vec<Complex64> {
        eigenvalues(&self.a_open)
    }

    pub fn transfer(&self, s: Complex64) -> Result<Complex64, SpectralError> {
        let n = self.dim();
        let m = DMatrix::from_fn(n, n, |i, j| {
            let a = Complex64::new(-self.a_open[(i, j)], 0.0);
            if i == j {
                a + s
            } else {
                a
            }
        });
        let rhs = self.b.map(|v| Complex64::new(v, 0.0));
        let x = m.lu().solve(&rhs).ok_or(SpectralError::AtPole { re: s.re, im: s.im })?;
        let g: Complex64 = x.iter().zip(self.c.iter()).map(|(xi, ci)| xi * *ci).sum();
        if g.re.is_finite() && g.im.is_finite() {
            Ok(g)
        } else {
            Err(SpectralError::AtPole { re: s.re, im: s.im })
        }
    }
}

/// `theta1 theta2 k`, with the Hill slope at `z1` in place of `theta1` when given.
pub fn aif_loop_gain(pp: &FopPlantParams, hill: Option<&HillParams>, z1: f64) -> Result<f64, SpectralError> {
    let actuation = match hill {
        Some(h) => hill_value_and_derivative(z1, h)
            .map_err(|e| SpectralError::InvalidRequest(e.to_string()))?
            .1,
        None => pp.theta1,
    };
    Ok(actuation * pp.theta2 * pp.k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NyquistOptions {
    /// Initial upper end of the frequency range; extended until the locus is
    /// within `1e-3` of the origin relative to the critical point.
    pub omega_max: f64,
    /// Initial samples per axis segment, before adaptive refinement.
    pub n_samples: usize,
    /// Open-loop poles closer than this to the shifted axis are indented around.
    pub pole_tol: f64,
    pub indent: bool,
    pub indent_radius: f64,
    /// Relative to `|critical point|`.
    pub wind_tol: f64,
}

impl Default for NyquistOptions {
    fn default() -> Self {
        Self {
            omega_max: 100.0,
            n_samples: 200,
            pole_tol: 1e-6,
            indent: true,
            indent_radius: 1e-3,
            wind_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyLocus {
    pub state: Vec<f64>,
    pub lambda: f64,
    pub gain: f64,
    /// `-1 / gain`.
    pub critical_point: f64,
    /// `Im(s)` of each contour point; symmetric about zero.
    pub omega: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Clockwise encirclements of the critical point.
    pub encirclements: i64,
    /// Open-loop poles strictly right of the shifted axis.
    pub q_xi: usize,
    /// Open-loop poles on the shifted axis, bypassed on their right.
    pub indented_poles: Vec<Complex64>,
    /// Closed-loop eigenvalues right of the shifted axis, when unambiguous.
    pub closed_loop_right: Option<usize>,
    pub omega_end: f64,
    pub min_distance: f64,
    /// The transfer function vanishes along the contour (no loop to speak of).
    pub degenerate_numerator: bool,
}

impl FrequencyLocus {
    /// Whether the encirclement count equals `p - q`.
    pub fn consistent(&self) -> Option<bool> {
        self.closed_loop_right
            .map(|p| p as i64 - self.q_xi as i64 == self.encirclements)
    }

    /// CSV with header `omega,re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "omega,re,im")?;
        for (o, g) in self.omega.iter().zip(&self.values) {
            writeln!(w, "{},{},{}", sig17(*o), sig17(g.re), sig17(g.im))?;
        }
        Ok(())
    }

    pub fn summary(&self) -> LocusSummary {
        LocusSummary {
            state: self.state.clone(),
            lambda: self.lambda,
            gain: self.gain,
            critical_point: self.critical_point,
            encirclements: self.encirclements,
            q_xi: self.q_xi,
            closed_loop_right: self.closed_loop_right,
            consistent: self.consistent(),
            indented_poles: self.indented_poles.iter().map(|p| [p.re, p.im]).collect(),
            omega_end: self.omega_end,
            min_distance: self.min_distance,
            samples: self.omega.len(),
            degenerate_numerator: self.degenerate_numerator,
        }
    }
}

/// JSON sidecar of a locus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocusSummary {
    pub state: Vec<f64>,
    pub lambda: f64,
    pub gain: f64,
    pub critical_point: f64,
    pub encirclements: i64,
    pub q_xi: usize,
    pub closed_loop_right: Option<usize>,
    pub consistent: Option<bool>,
    pub indented_poles: Vec<[f64; 2]>,
    pub omega_end: f64,
    pub min_distance: f64,
    pub samples: usize,
    pub degenerate_numerator: bool,
}

#[derive(Debug, Clone, Copy)]
enum Piece {
    /// `omega = OMEGA_SCALE (exp(v) - 1)` for `v` in `[v0, v1]`.
    Axis { v0: f64, v1: f64 },
    /// `s = -lambda + j center + rho exp(j phi)`.
    Arc { center: f64, phi0: f64, phi1: f64 },
}

const OMEGA_SCALE: f64 = 0.01;
const MAX_DEPTH: usize = 60;

fn omega_to_v(w: f64) -> f64 {
    (w / OMEGA_SCALE).ln_1p()
}

struct Contour<'a> {
    lp: &'a FrozenLoop,
    lambda: f64,
    rho: f64,
    critical: f64,
}

impl Contour<'_> {
    fn point(&self, piece: Piece, t: f64) -> Complex64 {
        match piece {
            Piece::Axis { v0, v1 } => {
                let v = v0 + (v1 - v0) * t;
                Complex64::new(-self.lambda, OMEGA_SCALE * v.exp_m1())
            }
            Piece::Arc { center, phi0, phi1 } => {
                let phi = phi0 + (phi1 - phi0) * t;
                Complex64::new(-self.lambda, center) + Complex64::from_polar(self.rho, phi)
            }
        }
    }

    fn eval(&self, piece: Piece, t: f64) -> Result<(Complex64, Complex64), SpectralError> {
        let s = self.point(piece, t);
        let g = self.lp.transfer(s).map_err(|_| {
            SpectralError::Contour(format!("contour hits an open-loop pole near {}{:+}i", s.re, s.im))
        })?;
        Ok((s, g))
    }

    fn sample(&self, piece: Piece, n_init: usize, out: &mut Vec<(Complex64, Complex64)>) -> Result<(), SpectralError> {
        let n = n_init.max(2);
        let mut prev = (0.0, self.eval(piece, 0.0)?);
        if out.is_empty() {
            out.push(prev.1);
        }
        for i in 1..n {
            let t = i as f64 / (n - 1) as f64;
            let next = (t, self.eval(piece, t)?);
            self.subdivide(piece, prev, next, 0, out)?;
            prev = next;
        }
        Ok(())
    }

    fn subdivide(
        &self,
        piece: Piece,
        a: (f64, (Complex64, Complex64)),
        b: (f64, (Complex64, Complex64)),
        depth: usize,
        out: &mut Vec<(Complex64, Complex64)>,
    ) -> Result<(), SpectralError> {
        let (ga, gb) = (a.1 .1, b.1 .1);
        let around_critical = angle_step(ga, gb, self.critical).abs() < FRAC_PI_4;
        let around_origin = ga.norm() < 1e-300 || gb.norm() < 1e-300 || angle_step(ga, gb, 0.0).abs() < FRAC_PI_4;
        if (around_critical && around_origin) || depth >= MAX_DEPTH {
            if !around_critical {
                return Err(SpectralError::Contour(format!(
                    "phase increment around the critical point did not resolve near s = {}{:+}i",
                    b.1 .0.re, b.1 .0.im
                )));
            }
            out.push(b.1);
            return Ok(());
        }
        let tm = 0.5 * (a.0 + b.0);
        let m = (tm, self.eval(piece, tm)?);
        self.subdivide(piece, a, m, depth + 1, out)?;
        self.subdivide(piece, m, b, depth + 1, out)
    }
}

/// Phase increment of `g - c` from `ga` to `gb`, wrapped to `(-pi, pi]`.
fn angle_step(ga: Complex64, gb: Complex64, c: f64) -> f64 {
    let d = (gb - c).arg() - (ga - c).arg();
    let wrapped = d - 2.0 * PI * ((d + PI) / (2.0 * PI)).floor();
    if wrapped <= -PI {
        wrapped + 2.0 * PI
    } else {
        wrapped
    }
}

/// Nyquist locus of the frozen loop along `s = -lambda + j omega`, with
/// encirclements of `-1 / gain` counted clockwise.
///
/// Open-loop poles on the shifted axis are bypassed by semicircles of radius
/// `indent_radius` on their right, so they are not counted in `q_xi`. Only the
/// upper half is refined; the lower half is its complex conjugate. The contour
/// is closed through the origin once the locus has decayed.
pub fn nyquist_locus(
    lp: &FrozenLoop,
    lambda: f64,
    gain: f64,
    opts: &NyquistOptions,
) -> Result<FrequencyLocus, SpectralError> {
    if !(gain > 0.0 && gain.is_finite()) {
        return Err(SpectralError::InvalidRequest(format!("loop gain must be positive, got {gain}")));
    }
    if !(lambda.is_finite() && opts.omega_max > 0.0 && opts.indent_radius > 0.0) {
        return Err(SpectralError::InvalidRequest("lambda, omega_max and indent_radius must be positive and finite".into()));
    }
    let critical = -1.0 / gain;
    let rho = opts.indent_radius;
    let poles = lp.open_loop_poles();
    let marginal: Vec<Complex64> = poles
        .iter()
        .copied()
        .filter(|p| (p.re + lambda).abs() <= opts.pole_tol)
        .collect();
    if !marginal.is_empty() && !opts.indent {
        let p = marginal[0];
        return Err(SpectralError::Contour(format!(
            "open-loop pole {}{:+}i lies on the shifted axis and indentation is disabled",
            p.re, p.im
        )));
    }
    let q_xi = poles.iter().filter(|p| p.re + lambda > opts.pole_tol).count();

    // centers of the upper-half indentations, merged when closer than 2 rho
    let mut centers: Vec<f64> = marginal
        .iter()
        .map(|p| if p.im.abs() <= opts.pole_tol { 0.0 } else { p.im })
        .filter(|w| *w >= 0.0)
        .collect();
    centers.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::new();
    for w in centers {
        match merged.last_mut() {
            Some(last) if w - *last < 2.0 * rho => {
                if *last != 0.0 {
                    *last = 0.5 * (*last + w);
                }
            }
            _ => merged.push(w),
        }
    }
    if merged.first().is_some_and(|w| *w > 0.0 && *w < 2.0 * rho) {
        merged[0] = 0.0;
    }

    let contour = Contour {
        lp,
        lambda,
        rho,
        critical,
    };

    let top = merged.last().copied().unwrap_or(0.0);
    let mut omega_end = opts.omega_max.max(top + 2.0 * rho + 1.0);
    loop {
        let g = lp.transfer(Complex64::new(-lambda, omega_end))?;
        if gain * g.norm() <= 1e-3 || omega_end > 1e12 {
            break;
        }
        omega_end *= 2.0;
    }
    if omega_end > 1e12 {
        return Err(SpectralError::Contour("locus does not decay; the loop is not strictly proper".into()));
    }

    let mut pieces = Vec::new();
    let mut cursor = 0.0;
    for &w in &merged {
        if w == 0.0 {
            pieces.push((Piece::Arc { center: 0.0, phi0: 0.0, phi1: FRAC_PI_2 }, 32));
        } else {
            pieces.push((
                Piece::Axis {
                    v0: omega_to_v(cursor),
                    v1: omega_to_v(w - rho),
                },
                opts.n_samples,
            ));
            pieces.push((Piece::Arc { center: w, phi0: -FRAC_PI_2, phi1: FRAC_PI_2 }, 64));
        }
        cursor = w + rho;
    }
    pieces.push((
        Piece::Axis {
            v0: omega_to_v(cursor),
            v1: omega_to_v(omega_end),
        },
        opts.n_samples,
    ));

    let mut upper: Vec<(Complex64, Complex64)> = Vec::new();
    for (piece, n) in pieces {
        contour.sample(piece, n, &mut upper)?;
    }

    let mut full: Vec<(Complex64, Complex64)> = upper[1..].iter().rev().map(|(s, g)| (s.conj(), g.conj())).collect();
    full.extend(upper.iter().copied());

    let mut total = 0.0;
    for w in full.windows(2) {
        total += angle_step(w[0].1, w[1].1, critical);
    }
    total += angle_step(full[full.len() - 1].1, full[0].1, critical);
    let turns = total / (2.0 * PI);
    if (turns - turns.round()).abs() > 0.05 {
        return Err(SpectralError::Contour(format!("accumulated phase {turns} turns is not an integer")));
    }
    let min_distance = full.iter().map(|(_, g)| (g - critical).norm()).fold(f64::INFINITY, f64::min);
    if min_distance <= opts.wind_tol * critical.abs() {
        return Err(SpectralError::MarginalWinding { distance: min_distance });
    }
    let degenerate_numerator = full.iter().all(|(_, g)| g.norm() < 1e-12);

    let closed = eigenvalues(&lp.closed_loop(gain));
    let closed_loop_right = split_count(&closed, lambda, SPLIT_TOL).ok().map(|s| s.0);

    Ok(FrequencyLocus {
        state: lp.state.clone(),
        lambda,
        gain,
        critical_point: critical,
        omega: full.iter().map(|(s, _)| s.im).collect(),
        values: full.iter().map(|(_, g)| *g).collect(),
        encirclements: -(turns.round() as i64),
        q_xi,
        indented_poles: marginal,
        closed_loop_right,
        omega_end,
        min_distance,
        degenerate_numerator,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootLocus {
    pub gains: Vec<f64>,
    pub lambda: f64,
    pub open_loop_poles: Vec<Complex64>,
    /// `traces[k][i]` is pole `k` at `gains[i]`.
    pub traces: Vec<Vec<Complex64>>,
    /// `(right of -lambda, left of -lambda)` per gain; eigenvalues within
    /// [`SPLIT_TOL`] of the line are in neither count.
    pub splits: Vec<(usize, usize)>,
}

impl RootLocus {
    /// CSV with header `gain,re_1,im_1,...,re_n,im_n,right,left`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "gain")?;
        for k in 1..=self.traces.len() {
            write!(w, ",re_{k},im_{k}")?;
        }
        writeln!(w, ",right,left")?;
        for (i, g) in self.gains.iter().enumerate() {
            write!(w, "{}", sig17(*g))?;
            for trace in &self.traces {
                write!(w, ",{},{}", sig17(trace[i].re), sig17(trace[i].im))?;
            }
            writeln!(w, ",{},{}", self.splits[i].0, self.splits[i].1)?;
        }
        Ok(())
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Reorder `next` to follow `prev`: optimal assignment for small sizes, greedy otherwise.
fn match_poles(prev: &[Complex64], next: &[Complex64], perms: &[Vec<usize>]) -> Vec<Complex64> {
    if !perms.is_empty() {
        let best = perms
            .iter()
            .min_by(|a, b| {
                let cost = |p: &Vec<usize>| -> f64 { p.iter().enumerate().map(|(i, &j)| (prev[i] - next[j]).norm_sqr()).sum() };
                cost(a).total_cmp(&cost(b))
            })
            .expect("at least one permutation");
        return best.iter().map(|&j| next[j]).collect();
    }
    let mut free: Vec<Option<Complex64>> = next.iter().copied().map(Some).collect();
    prev.iter()
        .map(|p| {
            let (j, _) = free
                .iter()
                .enumerate()
                .filter_map(|(j, v)| v.map(|v| (j, (v - p).norm_sqr())))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("as many poles as traces");
            free[j].take().unwrap()
        })
        .collect()
}

/// Closed-loop eigenvalues of the frozen loop for each gain, continued across
/// gains by nearest matching.
pub fn root_locus(lp: &FrozenLoop, gains: &[f64], lambda: f64) -> Result<RootLocus, SpectralError> {
    if gains.is_empty() {
        return Err(SpectralError::InvalidRequest("gain grid is empty".into()));
    }
    if gains.iter().any(|g| !(*g > 0.0 && g.is_finite())) || gains.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SpectralError::InvalidRequest("gains must be positive and strictly increasing".into()));
    }
    let n = lp.dim();
    let perms = if n <= 6 { permutations(n) } else { Vec::new() };
    let open = lp.open_loop_poles();
    let mut traces: Vec<Vec<Complex64>> = vec![Vec::with_capacity(gains.len()); n];
    let mut splits = Vec::with_capacity(gains.len());
    let mut prev = open.clone();
    for &g in gains {
        let eigs = eigenvalues(&lp.closed_loop(g));
        let ordered = match_poles(&prev, &eigs, &perms);
        for (k, e) in ordered.iter().enumerate() {
            traces[k].push(*e);
        }
        let right = eigs.iter().filter(|e| e.re + lambda > SPLIT_TOL).count();
        let left = eigs.iter().filter(|e| e.re + lambda < -SPLIT_TOL).count();
        splits.push((right, left));
        prev = ordered;
    }
    Ok(RootLocus {
        gains: gains.to_vec(),
        lambda,
        open_loop_poles: open,
        traces,
        splits,
    })
}

/// Centroid and angles of the four high-gain asymptotes of the antithetic loop
/// with first-order production: `(-2 gamma - eta (z1 + z2)) / 4` and `pi/4 + q pi/2`.
pub fn aif_asymptotes(z: [f64; 2], eta: f64, gamma: f64) -> (f64, [f64; 4]) {
    let centroid = (-2.0 * gamma - eta * (z[0] + z[1])) / 4.0;
    (centroid, [0, 1, 2, 3].map(|q| FRAC_PI_4 + q as f64 * FRAC_PI_2))
}
