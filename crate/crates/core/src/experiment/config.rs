use std::path::PathBuf;

use serde::Deserialize;

use crate::experiment::ExperimentError;
use crate::interval::Interval;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub region: Option<RegionConfig>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Controller with the two-species first-order production plant.
    FirstOrder,
    AllSequestration,
    Bistable,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    #[serde(default)]
    pub mu: Option<f64>,
    pub eta: f64,
    #[serde(default)]
    pub theta1: Option<f64>,
    #[serde(default)]
    pub theta2: Option<f64>,
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub phi1: Option<f64>,
    #[serde(default)]
    pub phi2: Option<f64>,
    #[serde(default)]
    pub mu1: Option<f64>,
    #[serde(default)]
    pub mu2: Option<f64>,
    #[serde(default)]
    pub hill: Option<HillConfig>,
    #[serde(default)]
    pub uncertainty: Option<UncertaintyConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HillConfig {
    pub k1: f64,
    pub k2: f64,
    pub n: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintyConfig {
    /// `[lower, upper]` bounds on the sequestration rate.
    pub eta: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    pub t_end: f64,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default = "default_max_step")]
    pub max_step: f64,
    #[serde(default = "default_transient")]
    pub transient_fraction: f64,
    /// Extra sequestration rates to simulate; regions built from the simulation
    /// cover the attractors at every listed rate.
    #[serde(default)]
    pub eta_samples: Vec<f64>,
}

fn default_rel_tol() -> f64 {
    1e-8
}
fn default_abs_tol() -> f64 {
    1e-10
}
fn default_max_step() -> f64 {
    0.05
}
fn default_transient() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    pub coord: usize,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    /// Explicit polygon in the controller plane.
    #[serde(default)]
    pub vertices: Option<Vec<[f64; 2]>>,
    /// Name of the block whose trajectories the hull wraps (`"simulate"`).
    #[serde(default)]
    pub hull_of: Option<String>,
    /// Absolute inflation; overrides `margin_fraction`.
    #[serde(default)]
    pub margin: Option<f64>,
    /// Inflation as a fraction of the attractor's bounding-box diagonal.
    #[serde(default = "default_margin_fraction")]
    pub margin_fraction: f64,
    #[serde(default)]
    pub transient_fraction: Option<f64>,
    #[serde(default = "default_max_vertices")]
    pub max_vertices: usize,
    /// Bound the plant coordinates by the trajectory range plus the margin.
    #[serde(default)]
    pub bound_plant: bool,
    #[serde(default)]
    pub bounds: Vec<BoundConfig>,
    #[serde(default)]
    pub slope: Option<[f64; 2]>,
    #[serde(default)]
    pub slope_strips: usize,
    /// Number of times certification may retry with half the margin.
    #[serde(default = "default_halvings")]
    pub margin_halvings: usize,
}

fn default_margin_fraction() -> f64 {
    0.25
}
fn default_max_vertices() -> usize {
    16
}
fn default_halvings() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub lambda: f64,
    /// Expected dominance degree.
    #[serde(default)]
    pub p: Option<usize>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_omega_max")]
    pub omega_max: f64,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    /// Nyquist loop gain; by default the physical gain of the loop.
    #[serde(default)]
    pub loop_gain: Option<f64>,
    /// Root-locus gain grid, increasing.
    #[serde(default)]
    pub gains: Vec<f64>,
    /// Evaluate at these states instead of the region vertices.
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    #[serde(default = "default_density")]
    pub sample_density: usize,
    /// Include the interior grid when sampling spectra and loci.
    #[serde(default)]
    pub include_grid: bool,
    #[serde(default = "default_random")]
    pub random_samples: usize,
    /// Certificate to verify: a file path, or `table1:<name>` for a bundled one.
    #[serde(default)]
    pub certificate: Option<String>,
}

fn default_omega_max() -> f64 {
    100.0
}
fn default_n_samples() -> usize {
    200
}
fn default_density() -> usize {
    20
}
fn default_random() -> usize {
    256
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            p: None,
            epsilon: None,
            omega_max: default_omega_max(),
            n_samples: default_n_samples(),
            loop_gain: None,
            gains: Vec::new(),
            points: Vec::new(),
            sample_density: default_density(),
            include_grid: false,
            random_samples: default_random(),
            certificate: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            formats: default_formats(),
        }
    }
}

fn bad(key: &str, msg: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Config(format!("{key}: {msg}"))
}

fn positive(key: &str, v: f64) -> Result<(), ExperimentError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(bad(key, format!("must be positive, got {v}")))
    }
}

fn nonneg(key: &str, v: f64) -> Result<(), ExperimentError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(bad(key, format!("must be nonnegative, got {v}")))
    }
}

pub(crate) fn require(key: &str, v: Option<f64>) -> Result<f64, ExperimentError> {
    v.ok_or_else(|| bad(key, "missing for this model kind"))
}

pub(crate) fn interval(key: &str, v: [f64; 2]) -> Result<Interval, ExperimentError> {
    Interval::new(v[0], v[1]).ok_or_else(|| bad(key, format!("[{}, {}] is not an interval", v[0], v[1])))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Semantic checks; errors name the offending key.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let m = &self.model;
        positive("model.eta", m.eta)?;
        let unused = |keys: &[(&str, bool)]| -> Result<(), ExperimentError> {
            match keys.iter().find(|(_, set)| *set) {
                Some((key, _)) => Err(bad(key, format!("not used by model kind {:?}", m.kind))),
                None => Ok(()),
            }
        };
        match m.kind {
            ModelKind::FirstOrder => {
                nonneg("model.mu", require("model.mu", m.mu)?)?;
                match (&m.hill, m.theta1) {
                    (None, t) => positive("model.theta1", require("model.theta1", t)?)?,
                    (Some(_), Some(_)) => return Err(bad("model.theta1", "replaced by the [model.hill] block; remove it")),
                    (Some(_), None) => {}
                }
                positive("model.theta2", require("model.theta2", m.theta2)?)?;
                positive("model.k", require("model.k", m.k)?)?;
                positive("model.gamma", require("model.gamma", m.gamma)?)?;
                unused(&[
                    ("model.phi1", m.phi1.is_some()),
                    ("model.phi2", m.phi2.is_some()),
                    ("model.mu1", m.mu1.is_some()),
                    ("model.mu2", m.mu2.is_some()),
                ])?;
                if let Some(h) = &m.hill {
                    positive("model.hill.k1", h.k1)?;
                    nonneg("model.hill.k2", h.k2)?;
                    if h.n == 0 {
                        return Err(bad("model.hill.n", "must be at least 1"));
                    }
                }
            }
            ModelKind::AllSequestration => {
                nonneg("model.mu", require("model.mu", m.mu)?)?;
                positive("model.theta1", require("model.theta1", m.theta1)?)?;
                positive("model.theta2", require("model.theta2", m.theta2)?)?;
                positive("model.k", require("model.k", m.k)?)?;
                nonneg("model.phi1", require("model.phi1", m.phi1)?)?;
                nonneg("model.phi2", require("model.phi2", m.phi2)?)?;
                unused(&[
                    ("model.gamma", m.gamma.is_some()),
                    ("model.hill", m.hill.is_some()),
                    ("model.mu1", m.mu1.is_some()),
                    ("model.mu2", m.mu2.is_some()),
                ])?;
            }
            ModelKind::Bistable => {
                nonneg("model.mu1", require("model.mu1", m.mu1)?)?;
                nonneg("model.mu2", require("model.mu2", m.mu2)?)?;
                nonneg("model.theta1", require("model.theta1", m.theta1)?)?;
                nonneg("model.gamma", require("model.gamma", m.gamma)?)?;
                unused(&[
                    ("model.mu", m.mu.is_some()),
                    ("model.theta2", m.theta2.is_some()),
                    ("model.k", m.k.is_some()),
                    ("model.phi1", m.phi1.is_some()),
                    ("model.phi2", m.phi2.is_some()),
                    ("model.hill", m.hill.is_some()),
                ])?;
            }
        }
        if let Some(u) = &m.uncertainty {
            let iv = interval("model.uncertainty.eta", u.eta)?;
            positive("model.uncertainty.eta", iv.lo)?;
        }
        let dim = self.dim();
        if let Some(s) = &self.simulate {
            positive("simulate.t_end", s.t_end)?;
            positive("simulate.rel_tol", s.rel_tol)?;
            positive("simulate.abs_tol", s.abs_tol)?;
            positive("simulate.max_step", s.max_step)?;
            if !(0.0..1.0).contains(&s.transient_fraction) {
                return Err(bad("simulate.transient_fraction", "must lie in [0, 1)"));
            }
            if let Some(x0) = &s.x0 {
                if x0.len() != dim {
                    return Err(bad("simulate.x0", format!("needs {dim} entries, got {}", x0.len())));
                }
                if x0.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(bad("simulate.x0", "entries must be finite and nonnegative"));
                }
            }
            for v in &s.eta_samples {
                positive("simulate.eta_samples", *v)?;
            }
        }
        if let Some(r) = &self.region {
            match (&r.vertices, &r.hull_of) {
                (Some(_), Some(_)) => return Err(bad("region", "give either `vertices` or `hull_of`, not both")),
                (None, None) => return Err(bad("region", "needs `vertices` or `hull_of`")),
                (Some(v), None) => {
                    if v.is_empty() {
                        return Err(bad("region.vertices", "empty region"));
                    }
                }
                (None, Some(name)) => {
                    if name != "simulate" {
                        return Err(bad("region.hull_of", format!("unknown block `{name}`; only `simulate` can be wrapped")));
                    }
                    if self.simulate.is_none() {
                        return Err(bad("region.hull_of", "refers to a missing [simulate] block"));
                    }
                }
            }
            if let Some(m) = r.margin {
                nonneg("region.margin", m)?;
            }
            nonneg("region.margin_fraction", r.margin_fraction)?;
            if let Some(t) = r.transient_fraction {
                if !(0.0..1.0).contains(&t) {
                    return Err(bad("region.transient_fraction", "must lie in [0, 1)"));
                }
            }
            if r.max_vertices < 3 {
                return Err(bad("region.max_vertices", "must be at least 3"));
            }
            for b in &r.bounds {
                if b.coord >= dim {
                    return Err(bad("region.bounds.coord", format!("{} exceeds the state dimension {dim}", b.coord)));
                }
                interval("region.bounds", [b.lo, b.hi])?;
            }
            if let Some(s) = r.slope {
                interval("region.slope", s)?;
            }
        }
        let a = &self.analysis;
        nonneg("analysis.lambda", a.lambda)?;
        positive("analysis.omega_max", a.omega_max)?;
        if let Some(g) = a.loop_gain {
            positive("analysis.loop_gain", g)?;
        }
        if let Some(e) = a.epsilon {
            positive("analysis.epsilon", e)?;
        }
        if let Some(p) = a.p {
            if p > dim {
                return Err(bad("analysis.p", format!("exceeds the state dimension {dim}")));
            }
        }
        for g in &a.gains {
            positive("analysis.gains", *g)?;
        }
        if a.gains.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("analysis.gains", "must be strictly increasing"));
        }
        for p in &a.points {
            if p.len() != dim {
                return Err(bad("analysis.points", format!("each point needs {dim} entries")));
            }
        }
        if self.output.formats.is_empty() {
            return Err(bad("output.formats", "at least one format is required"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self.model.kind {
            ModelKind::FirstOrder | ModelKind::AllSequestration => 4,
            ModelKind::Bistable => 2,
        }
    }
}
