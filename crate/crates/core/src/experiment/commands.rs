use std::fs;
use std::path::PathBuf;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::dominance::{
    classify, margin_fallback, solve_dominance_lmi, solve_robust_dominance, table1, verify_certificate, Classification,
    DominanceCertificate, DominanceOptions, FallbackAttempt, RandomSamples, VerificationReport,
};
use crate::error::DominanceError;
use crate::experiment::config::{interval, require, ExperimentConfig, ModelKind};
use crate::experiment::{Experiment, ExperimentError, Outputs, TOOL_VERSION};
use crate::geometry::Polygon;
use crate::models::{
    closed_loop, Actuation, AllSeqPlantParams, AllSequestration, BistableParams, BistableSwitch, ClosedLoop,
    ControllerParams, FirstOrderProduction, FopPlantParams, HillParams, ParamPins, SystemModel,
};
use crate::ode::{
    classify_trajectory, integrate, refine_equilibrium, sig17, AttractorReport, IntegratorSettings, Trajectory,
};
use crate::regions::{default_margin, hull_of_trajectories, HullOptions, Region, RegionVertex};
use crate::spectral::{
    aif_loop_gain, eigenvalues, nyquist_locus, root_locus, spectrum_at, FrozenLoop, LocusSummary,
    NyquistOptions, SpectrumSample,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Spectrum,
    Nyquist,
    RootLocus,
    Certify,
    /// Check a certificate: a file path or `table1:<name>`; falls back to `analysis.certificate`.
    Verify { certificate: Option<String> },
    RobustCertify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Spectrum => "spectrum",
            Self::Nyquist => "nyquist",
            Self::RootLocus => "rootlocus",
            Self::Certify => "certify",
            Self::Verify { .. } => "verify",
            Self::RobustCertify => "robust-certify",
        }
    }

    pub(crate) fn execute(&self, exp: &Experiment, out: &mut Outputs) -> Result<(), ExperimentError> {
        match self {
            Self::Simulate => simulate(exp, out),
            Self::Spectrum => spectrum(exp, out),
            Self::Nyquist => nyquist(exp, out),
            Self::RootLocus => rootlocus(exp, out),
            Self::Certify => certify(exp, out, false),
            Self::RobustCertify => certify(exp, out, true),
            Self::Verify { certificate } => verify(exp, out, certificate.as_deref()),
        }
    }
}

/// The model described by a configuration, at its nominal or an overridden sequestration rate.
#[derive(Debug, Clone)]
pub enum BuiltModel {
    FirstOrder(ClosedLoop<FirstOrderProduction>),
    AllSequestration(ClosedLoop<AllSequestration>),
    Bistable(BistableSwitch),
}

impl BuiltModel {
    pub fn from_config(cfg: &ExperimentConfig, eta: Option<f64>) -> Result<Self, ExperimentError> {
        let m = &cfg.model;
        let eta = eta.unwrap_or(m.eta);
        Ok(match m.kind {
            ModelKind::FirstOrder => {
                let cp = ControllerParams::new(require("model.mu", m.mu)?, eta)?;
                let theta2 = require("model.theta2", m.theta2)?;
                let pp = FopPlantParams::new(
                    m.theta1.unwrap_or(1.0),
                    theta2,
                    require("model.k", m.k)?,
                    require("model.gamma", m.gamma)?,
                )?;
                let plant = match &m.hill {
                    Some(h) => FirstOrderProduction::hill(pp, HillParams::new(h.k1, h.k2, h.n)?)?,
                    None => FirstOrderProduction::linear(pp)?,
                };
                Self::FirstOrder(closed_loop(cp, plant, theta2)?)
            }
            ModelKind::AllSequestration => {
                let cp = ControllerParams::new(require("model.mu", m.mu)?, eta)?;
                let pp = AllSeqPlantParams::new(
                    require("model.phi1", m.phi1)?,
                    require("model.phi2", m.phi2)?,
                    require("model.theta1", m.theta1)?,
                    require("model.k", m.k)?,
                )?;
                Self::AllSequestration(closed_loop(cp, AllSequestration::new(pp)?, require("model.theta2", m.theta2)?)?)
            }
            ModelKind::Bistable => Self::Bistable(BistableSwitch::new(BistableParams::new(
                require("model.mu1", m.mu1)?,
                require("model.mu2", m.mu2)?,
                require("model.theta1", m.theta1)?,
                eta,
                require("model.gamma", m.gamma)?,
            )?)?),
        })
    }

    pub fn as_model(&self) -> &dyn SystemModel {
        match self {
            Self::FirstOrder(m) => m,
            Self::AllSequestration(m) => m,
            Self::Bistable(m) => m,
        }
    }

    /// Frozen loop at a region point and its physical loop gain.
    fn frozen_loop(&self, v: &RegionVertex) -> Result<(FrozenLoop, f64), ExperimentError> {
        match self {
            Self::FirstOrder(m) => {
                let eta = v.pins.eta.unwrap_or(m.controller.eta);
                let lp = FrozenLoop::aif_unit([v.xi[0], v.xi[1]], eta, m.plant.params.gamma);
                let gain = match (v.pins.slope, m.plant.actuation) {
                    (Some(s), Actuation::Hill(_)) => s * m.plant.params.theta2 * m.plant.params.k,
                    (_, Actuation::Hill(h)) => aif_loop_gain(&m.plant.params, Some(&h), v.xi[0])?,
                    (_, Actuation::Linear) => aif_loop_gain(&m.plant.params, None, v.xi[0])?,
                };
                Ok((lp, gain))
            }
            _ => Ok((FrozenLoop::from_model_pinned(self.as_model(), &v.xi, &v.pins)?, 1.0)),
        }
    }
}

fn run_simulations(exp: &Experiment, model: &BuiltModel) -> Result<Vec<Trajectory>, ExperimentError> {
    let cfg = &exp.config;
    let sim = cfg
        .simulate
        .as_ref()
        .ok_or_else(|| ExperimentError::Config("simulate: block required by this command".into()))?;
    let settings = IntegratorSettings::new(sim.rel_tol, sim.abs_tol).with_max_step(sim.max_step);
    let x0 = sim.x0.clone().unwrap_or_else(|| vec![1.0; cfg.dim()]);
    let mut trajs = vec![integrate(model.as_model(), &x0, sim.t_end, &settings)?];
    for &eta in &sim.eta_samples {
        let m = BuiltModel::from_config(cfg, Some(eta))?;
        trajs.push(integrate(m.as_model(), &x0, sim.t_end, &settings)?);
    }
    Ok(trajs)
}

/// Region geometry and the trajectories it was built from.
struct RegionPlan {
    trajectories: Vec<Trajectory>,
    initial_margin: f64,
    halvings: usize,
}

fn plan_region(exp: &Experiment, model: &BuiltModel) -> Result<RegionPlan, ExperimentError> {
    let r = exp
        .config
        .region
        .as_ref()
        .ok_or_else(|| ExperimentError::Config("region: block required by this command".into()))?;
    if r.hull_of.is_none() {
        return Ok(RegionPlan {
            trajectories: Vec::new(),
            initial_margin: 0.0,
            halvings: 0,
        });
    }
    let trajectories = run_simulations(exp, model)?;
    let refs: Vec<&Trajectory> = trajectories.iter().collect();
    let initial_margin = match r.margin {
        Some(m) => m,
        None => default_margin(&refs, [0, 1], r.margin_fraction, transient(exp))?,
    };
    Ok(RegionPlan {
        trajectories,
        initial_margin,
        halvings: r.margin_halvings,
    })
}

fn transient(exp: &Experiment) -> f64 {
    let sim = exp.config.simulate.as_ref().map_or(0.5, |s| s.transient_fraction);
    exp.config
        .region
        .as_ref()
        .and_then(|r| r.transient_fraction)
        .unwrap_or(sim)
}

fn build_region(exp: &Experiment, plan: &RegionPlan, margin: f64, robust: bool) -> Result<Region, ExperimentError> {
    let cfg = &exp.config;
    let r = cfg.region.as_ref().expect("planned regions have a block");
    let n = cfg.dim();
    let tf = transient(exp);
    let mut region = match &r.vertices {
        Some(v) => {
            let polygon = Polygon::from_vertices(v.clone())
                .or_else(|| Polygon::hull(v))
                .ok_or_else(|| ExperimentError::Config("region.vertices: empty region".into()))?;
            Region::from_polygon(polygon, n)?
        }
        None => {
            let refs: Vec<&Trajectory> = plan.trajectories.iter().collect();
            let opts = HullOptions {
                transient_fraction: tf,
                max_vertices: r.max_vertices,
            };
            let mut region = hull_of_trajectories(&refs, [0, 1], margin, &opts)?;
            if r.bound_plant {
                let base = region.clone();
                for t in &plan.trajectories {
                    let boxed = base.clone().with_box_from(t, margin, tf)?;
                    for (c, b) in boxed.x_box.iter().enumerate() {
                        region.x_box[c] = match (region.x_box[c], b) {
                            (Some(a), Some(b)) => Some(a.hull(b)),
                            (None, b) => *b,
                            (a, None) => a,
                        };
                    }
                }
            }
            region
        }
    };
    for b in &r.bounds {
        region = region.with_bound(b.coord, interval("region.bounds", [b.lo, b.hi])?);
    }
    if let Some(s) = r.slope {
        region = region.with_slope(interval("region.slope", s)?);
    }
    region = region.with_slope_strips(r.slope_strips);
    if robust {
        let u = cfg
            .model
            .uncertainty
            .as_ref()
            .ok_or_else(|| ExperimentError::Config("model.uncertainty: required by robust-certify".into()))?;
        region = region.with_eta(interval("model.uncertainty.eta", u.eta)?);
    }
    region.validate()?;
    Ok(region)
}

/// Points at which spectra and loci are evaluated.
fn analysis_points(exp: &Experiment, model: &BuiltModel) -> Result<(Option<Region>, Vec<RegionVertex>), ExperimentError> {
    let a = &exp.config.analysis;
    if !a.points.is_empty() {
        let pts = a
            .points
            .iter()
            .map(|xi| RegionVertex {
                xi: xi.clone(),
                pins: ParamPins::default(),
            })
            .collect();
        return Ok((None, pts));
    }
    let plan = plan_region(exp, model)?;
    let region = build_region(exp, &plan, plan.initial_margin, false)?.bind_slope(model.as_model())?;
    let mut pts = region.vertices(model.as_model())?;
    if a.include_grid {
        pts.extend(region.sample_points(model.as_model(), a.sample_density)?);
    }
    Ok((Some(region), pts))
}

#[derive(Serialize)]
struct SimulateResult<'a> {
    model: String,
    samples: usize,
    t_end: f64,
    final_state: &'a [f64],
    accepted_steps: usize,
    rejected_steps: usize,
    attractor: &'a AttractorReport,
    sweeps: Vec<SweepResult>,
}

#[derive(Serialize)]
struct SweepResult {
    eta: f64,
    final_state: Vec<f64>,
    attractor: AttractorReport,
}

fn simulate(exp: &Experiment, out: &mut Outputs) -> Result<(), ExperimentError> {
    let model = BuiltModel::from_config(&exp.config, None)?;
    let trajs = run_simulations(exp, &model)?;
    let tf = exp.config.simulate.as_ref().map_or(0.5, |s| s.transient_fraction);
    let nominal = &trajs[0];
    let report = classify_trajectory(nominal, tf)?;
    let mut sweeps = Vec::new();
    let etas = exp.config.simulate.as_ref().map(|s| s.eta_samples.clone()).unwrap_or_default();
    for (i, (eta, t)) in etas.iter().zip(&trajs[1..]).enumerate() {
        out.csv(&format!("trajectory_eta_{i:02}.csv"), |w| t.write_csv(w))?;
        sweeps.push(SweepResult {
            eta: *eta,
            final_state: t.last_state().unwrap_or_default().to_vec(),
            attractor: classify_trajectory(t, tf)?,
        });
    }
    out.csv("trajectory.csv", |w| nominal.write_csv(w))?;
    out.json(
        "attractor.json",
        &SimulateResult {
            model: model.as_model().tag(),
            samples: nominal.len(),
            t_end: nominal.times.last().copied().unwrap_or_default(),
            final_state: nominal.last_state().unwrap_or_default(),
            accepted_steps: nominal.meta.accepted_steps,
            rejected_steps: nominal.meta.rejected_steps,
            attractor: &report,
            sweeps,
        },
    )
}

#[derive(Serialize)]
struct PointError {
    index: usize,
    xi: Vec<f64>,
    error: String,
}

#[derive(Serialize)]
struct SpectrumEntry {
    which_vertex: usize,
    xi: Vec<f64>,
    eta: Option<f64>,
    slope: Option<f64>,
    eigenvalues: Vec<[f64; 2]>,
    split: (usize, usize),
}

#[derive(Serialize)]
struct SpectrumResult {
    lambda: f64,
    points: usize,
    /// The split shared by every point, if it is the same everywhere.
    uniform_split: Option<(usize, usize)>,
    samples: Vec<SpectrumEntry>,
    errors: Vec<PointError>,
}

fn finish_points(errors: &[PointError], what: &str) -> Result<(), ExperimentError> {
    match errors.first() {
        None => Ok(()),
        Some(e) => Err(ExperimentError::Numerical(format!(
            "{what} failed at {} of the sampled points; first at point {}: {}",
            errors.len(),
            e.index,
            e.error
        ))),
    }
}

fn write_region(out: &mut Outputs, region: &Option<Region>) -> Result<(), ExperimentError> {
    match region {
        Some(r) => out.json("region.json", r),
        None => Ok(()),
    }
}

/// `which_vertex,re_1,im_1,...,re_n,im_n`, indexed by sampled point.
fn write_spectrum_rows(entries: &[SpectrumEntry], n: usize, w: &mut Vec<u8>) -> std::io::Result<()> {
    use std::io::Write;
    write!(w, "which_vertex")?;
    for k in 1..=n {
        write!(w, ",re_{k},im_{k}")?;
    }
    writeln!(w)?;
    for e in entries {
        write!(w, "{}", e.which_vertex)?;
        for [re, im] in &e.eigenvalues {
            write!(w, ",{},{}", sig17(*re), sig17(*im))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

fn spectrum(exp: &Experiment, out: &mut Outputs) -> Result<(), ExperimentError> {
    let model = BuiltModel::from_config(&exp.config, None)?;
    let (region, pts) = analysis_points(exp, &model)?;
    let lambda = exp.config.analysis.lambda;
    let mut samples: Vec<SpectrumSample> = Vec::new();
    let mut entries = Vec::new();
    let mut errors = Vec::new();
    for (i, v) in pts.iter().enumerate() {
        match spectrum_at(model.as_model(), v, lambda) {
            Ok(s) => {
                entries.push(SpectrumEntry {
                    which_vertex: i,
                    xi: v.xi.clone(),
                    eta: v.pins.eta,
                    slope: v.pins.slope,
                    eigenvalues: s.eigenvalues.iter().map(|e| [e.re, e.im]).collect(),
                    split: s.split,
                });
                samples.push(s);
            }
            Err(e) => errors.push(PointError {
                index: i,
                xi: v.xi.clone(),
                error: e.to_string(),
            }),
        }
    }
    let uniform_split = match samples.first() {
        Some(f) if errors.is_empty() && samples.iter().all(|s| s.split == f.split) => Some(f.split),
        _ => None,
    };
    out.csv("spectrum.csv", |w| write_spectrum_rows(&entries, exp.config.dim(), w))?;
    let status = finish_points(&errors, "eigenvalue split");
    write_region(out, &region)?;
    out.json(
        "spectrum.json",
        &SpectrumResult {
            lambda,
            points: pts.len(),
            uniform_split,
            samples: entries,
            errors,
        },
    )?;
    status
}

#[derive(Serialize)]
struct NyquistEntry {
    index: usize,
    file: String,
    eta: Option<f64>,
    slope: Option<f64>,
    #[serde(flatten)]
    summary: LocusSummary,
}

#[derive(Serialize)]
struct NyquistResult {
    lambda: f64,
    points: usize,
    /// Encirclement count shared by every point, if it is the same everywhere.
    uniform_encirclements: Option<i64>,
    all_consistent: bool,
    loci: Vec<NyquistEntry>,
    errors: Vec<PointError>,
}

fn nyquist(exp: &Experiment, out: &mut Outputs) -> Result<(), ExperimentError> {
    let model = BuiltModel::from_config(&exp.config, None)?;
    let (region, pts) = analysis_points(exp, &model)?;
    let a = &exp.config.analysis;
    let opts = NyquistOptions {
        omega_max: a.omega_max,
        n_samples: a.n_samples.max(2),
        ..NyquistOptions::default()
    };
    let mut loci = Vec::new();
    let mut errors = Vec::new();
    for (i, v) in pts.iter().enumerate() {
        let result = model
            .frozen_loop(v)
            .and_then(|(lp, natural)| Ok(nyquist_locus(&lp, a.lambda, a.loop_gain.unwrap_or(natural), &opts)?));
        match result {
            Ok(locus) => {
                let file = format!("nyquist_{i:03}.csv");
                out.csv(&file, |w| locus.write_csv(w))?;
                loci.push(NyquistEntry {
                    index: i,
                    file,
                    eta: v.pins.eta,
                    slope: v.pins.slope,
                    summary: locus.summary(),
                });
            }
            Err(e) => errors.push(PointError {
                index: i,
                xi: v.xi.clone(),
                error: e.to_string(),
            }),
        }
    }
    let uniform_encirclements = match loci.first() {
        Some(f) if errors.is_empty() && loci.iter().all(|l| l.summary.encirclements == f.summary.encirclements) => {
            Some(f.summary.encirclements)
        }
        _ => None,
    };
    let status = finish_points(&errors, "Nyquist locus");
    write_region(out, &region)?;
    out.json(
        "nyquist.json",
        &NyquistResult {
            lambda: a.lambda,
            points: pts.len(),
            uniform_encirclements,
            all_consistent: errors.is_empty() && loci.iter().all(|l| l.summary.consistent != Some(false)),
            loci,
            errors,
        },
    )?;
    status
}

#[derive(Serialize)]
struct RootLocusEntry {
    index: usize,
    file: String,
    xi: Vec<f64>,
    natural_gain: f64,
    open_loop_poles: Vec<[f64; 2]>,
    /// Gains at which the number of closed-loop poles right of the line changes.
    split_changes: Vec<SplitChange>,
}

#[derive(Serialize)]
struct SplitChange {
    gain: f64,
    right: usize,
    left: usize,
}

#[derive(Serialize)]
struct RootLocusResult {
    lambda: f64,
    gains: usize,
    loci: Vec<RootLocusEntry>,
    errors: Vec<PointError>,
}

fn default_gains() -> Vec<f64> {
    (0..=200).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 200.0)).collect()
}

fn rootlocus(exp: &Experiment, out: &mut Outputs) -> Result<(), ExperimentError> {
    let model = BuiltModel::from_config(&exp.config, None)?;
    let (region, pts) = analysis_points(exp, &model)?;
    let a = &exp.config.analysis;
    let gains = if a.gains.is_empty() { default_gains() } else { a.gains.clone() };
    let mut loci = Vec::new();
    let mut errors = Vec::new();
    for (i, v) in pts.iter().enumerate() {
        match model.frozen_loop(v).and_then(|(lp, natural)| Ok((root_locus(&lp, &gains, a.lambda)?, natural))) {
            Ok((rl, natural)) => {
                let file = format!("rootlocus_{i:03}.csv");
                out.csv(&file, |w| rl.write_csv(w))?;
                let mut split_changes = Vec::new();
                let mut prev: Option<(usize, usize)> = None;
                for (g, s) in rl.gains.iter().zip(&rl.splits) {
                    if prev != Some(*s) {
                        split_changes.push(SplitChange {
                            gain: *g,
                            right: s.0,
                            left: s.1,
                        });
                        prev = Some(*s);
                    }
                }
                loci.push(RootLocusEntry {
                    index: i,
                    file,
                    xi: v.xi.clone(),
                    natural_gain: natural,
                    open_loop_poles: rl.open_loop_poles.iter().map(|p| [p.re, p.im]).collect(),
                    split_changes,
                });
            }
            Err(e) => errors.push(PointError {
                index: i,
                xi: v.xi.clone(),
                error: e.to_string(),
            }),
        }
    }
    let status = finish_points(&errors, "root locus");
    write_region(out, &region)?;
    out.json(
        "rootlocus.json",
        &RootLocusResult {
            lambda: a.lambda,
            gains: gains.len(),
            loci,
            errors,
        },
    )?;
    status
}

fn dominance_options(exp: &Experiment) -> DominanceOptions {
    let a = &exp.config.analysis;
    DominanceOptions {
        epsilon: a.epsilon,
        expected_p: a.p,
        sample_density: a.sample_density,
        ..DominanceOptions::default()
    }
}

/// Equilibria near the simulated attractors, found by Newton from each
/// trajectory's post-transient mean and its final state.
fn nearby_equilibria(model: &dyn SystemModel, trajs: &[Trajectory], tf: f64) -> Vec<Vec<f64>> {
    let mut found: Vec<Vec<f64>> = Vec::new();
    for t in trajs {
        let start = t.transient_cut(tf);
        let tail = &t.states[start..];
        if tail.is_empty() {
            continue;
        }
        let mut mean = vec![0.0; t.dim()];
        for x in tail {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v / tail.len() as f64;
            }
        }
        for guess in [mean, tail[tail.len() - 1].clone()] {
            if let Ok(eq) = refine_equilibrium(model, &guess) {
                let scale = eq.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                let dup = found
                    .iter()
                    .any(|f| f.iter().zip(&eq).all(|(a, b)| (a - b).abs() <= 1e-6 * scale));
                if !dup {
                    found.push(eq);
                }
            }
        }
    }
    found
}

#[derive(Serialize)]
struct CertifyResult<'a> {
    p: usize,
    lambda: f64,
    epsilon: f64,
    residual_margin: f64,
    checked_points: usize,
    robust: bool,
    margin: f64,
    attempts: &'a [FallbackAttempt],
    equilibria: Vec<EquilibriumEntry>,
    classification: Option<Classification>,
}

#[derive(Serialize)]
struct EquilibriumEntry {
    state: Vec<f64>,
    eigenvalues: Vec<[f64; 2]>,
    in_region: bool,
}

#[derive(Serialize)]
struct CertifyFailure<'a> {
    robust: bool,
    attempts: &'a [FallbackAttempt],
    error: String,
}

fn certify(exp: &Experiment, out: &mut Outputs, robust: bool) -> Result<(), ExperimentError> {
    let model = BuiltModel::from_config(&exp.config, None)?;
    let plan = plan_region(exp, &model)?;
    let opts = dominance_options(exp);
    let lambda = exp.config.analysis.lambda;
    let attempt = |margin: f64| -> Result<DominanceCertificate, ExperimentError> {
        let region = build_region(exp, &plan, margin, robust)?;
        let cert = if robust {
            solve_robust_dominance(model.as_model(), &region, lambda, &opts)
        } else {
            solve_dominance_lmi(model.as_model(), &region, lambda, &opts)
        };
        Ok(cert?)
    };
    let fb = match margin_fallback(plan.initial_margin, plan.halvings, attempt) {
        Ok(fb) => fb,
        Err(fail) => {
            out.json(
                "certify.json",
                &CertifyFailure {
                    robust,
                    attempts: &fail.attempts,
                    error: fail.error.to_string(),
                },
            )?;
            return Err(fail.error);
        }
    };
    let mut cert = fb.value;
    cert.meta.config_hash = Some(exp.config_hash.clone());
    cert.meta.tool_version = Some(TOOL_VERSION.to_string());

    let m = model.as_model();
    let eqs = nearby_equilibria(m, &plan.trajectories, transient(exp));
    let region = cert.region.clone().expect("solver certificates carry their region");
    let entries: Vec<EquilibriumEntry> = eqs
        .iter()
        .map(|e| EquilibriumEntry {
            state: e.clone(),
            eigenvalues: eigenvalues(&m.jacobian(e)).iter().map(|c| [c.re, c.im]).collect(),
            in_region: region.contains(e, &ParamPins::default()),
        })
        .collect();
    let inside: Vec<_> = eqs
        .iter()
        .zip(&entries)
        .filter(|(_, en)| en.in_region)
        .map(|(e, _)| (e.clone(), eigenvalues(&m.jacobian(e))))
        .collect();
    let classification = if plan.trajectories.is_empty() {
        None
    } else {
        Some(classify(&cert, &inside)?)
    };

    let mut text = cert.to_json();
    text.push('\n');
    out.write("certificate.json", text.as_bytes())?;
    out.json("region.json", &region)?;
    out.json(
        "certify.json",
        &CertifyResult {
            p: cert.p,
            lambda: cert.lambda,
            epsilon: cert.epsilon,
            residual_margin: cert.residual_margin,
            checked_points: cert.checked_points,
            robust,
            margin: fb.margin,
            attempts: &fb.attempts,
            equilibria: entries,
            classification,
        },
    )
}

/// Read a certificate from a path or a bundled `table1:<name>` entry.
pub fn load_certificate(source: &str) -> Result<DominanceCertificate, ExperimentError> {
    let text = match source.strip_prefix("table1:") {
        Some("baseline") => table1::BASELINE.to_string(),
        Some("high_sensing") => table1::HIGH_SENSING.to_string(),
        Some("high_conversion") => table1::HIGH_CONVERSION.to_string(),
        Some(other) => {
            return Err(ExperimentError::Config(format!(
                "certificate: unknown bundled certificate `{other}` (baseline, high_sensing, high_conversion)"
            )))
        }
        None => fs::read_to_string(source).map_err(|e| ExperimentError::Io {
            path: PathBuf::from(source),
            source: e,
        })?,
    };
    DominanceCertificate::from_json(&text).map_err(|e| match e {
        DominanceError::Verification(m) | DominanceError::Dimension(m) => {
            ExperimentError::Config(format!("certificate {source}: {m}"))
        }
        e => ExperimentError::Config(format!("certificate {source}: {e}")),
    })
}

#[derive(Serialize)]
struct VerifyResult<'a> {
    certificate: &'a str,
    region_source: &'static str,
    random_samples: usize,
    seed: u64,
    report: &'a VerificationReport,
}

fn verify(exp: &Experiment, out: &mut Outputs, certificate: Option<&str>) -> Result<(), ExperimentError> {
    let source = certificate
        .map(str::to_string)
        .or_else(|| exp.config.analysis.certificate.clone())
        .ok_or_else(|| ExperimentError::Config("certificate: give --certificate or analysis.certificate".into()))?;
    let cert = load_certificate(&source)?;
    let model = BuiltModel::from_config(&exp.config, None)?;
    let (region, region_source) = if exp.config.region.is_some() {
        let plan = plan_region(exp, &model)?;
        let robust = exp.config.model.uncertainty.is_some() && cert.meta.robust;
        (build_region(exp, &plan, plan.initial_margin, robust)?, "config")
    } else {
        let r = cert
            .region
            .clone()
            .ok_or_else(|| ExperimentError::Config("region: neither the config nor the certificate defines one".into()))?;
        (r, "certificate")
    };
    let a = &exp.config.analysis;
    let random = (a.random_samples > 0).then_some(RandomSamples {
        count: a.random_samples,
        seed: exp.seed,
    });
    let report = verify_certificate(
        model.as_model(),
        &region,
        &cert.matrix,
        cert.lambda,
        cert.p,
        a.sample_density,
        random,
    )?;
    let residuals = residual_table(model.as_model(), &region, &cert.matrix, cert.lambda, a.sample_density)?;
    out.csv("residuals.csv", |w| {
        use std::io::Write;
        write!(w, "kind,index")?;
        for k in 1..=region.dim() {
            write!(w, ",xi_{k}")?;
        }
        writeln!(w, ",eta,slope,max_eigenvalue")?;
        for (kind, i, v, m) in &residuals {
            write!(w, "{kind},{i}")?;
            for x in &v.xi {
                write!(w, ",{}", sig17(*x))?;
            }
            let opt = |o: Option<f64>| o.map_or(String::new(), sig17);
            writeln!(w, ",{},{},{}", opt(v.pins.eta), opt(v.pins.slope), sig17(*m))?;
        }
        Ok(())
    })?;
    out.json("region.json", &region)?;
    out.json(
        "verification.json",
        &VerifyResult {
            certificate: &source,
            region_source,
            random_samples: random.map_or(0, |r| r.count),
            seed: exp.seed,
            report: &report,
        },
    )?;
    if report.passed {
        Ok(())
    } else {
        Err(ExperimentError::Certification(report.reasons.join("; ")))
    }
}

type ResidualRow = (&'static str, usize, RegionVertex, f64);

/// Largest residual eigenvalue at every vertex and grid point.
fn residual_table(
    model: &dyn SystemModel,
    region: &Region,
    p: &DMatrix<f64>,
    lambda: f64,
    density: usize,
) -> Result<Vec<ResidualRow>, ExperimentError> {
    use crate::dominance::{lmi_residual, max_eigenvalue};
    let region = region.clone().bind_slope(model)?;
    let sym = (p + p.transpose()) * 0.5;
    let mut rows = Vec::new();
    for (kind, pts) in [
        ("vertex", region.vertices(model)?),
        ("grid", region.sample_points(model, density)?),
    ] {
        for (i, v) in pts.into_iter().enumerate() {
            let a = model.jacobian_pinned(&v.xi, &v.pins);
            let m = max_eigenvalue(&lmi_residual(&a, &sym, lambda));
            rows.push((kind, i, v, m));
        }
    }
    Ok(rows)
}
