//! Convex regions: a polygon in two state coordinates (normally the controller
//! pair `(z1, z2)`) crossed with a box in the remaining coordinates and intervals
//! for uncertain parameters.
//!
//! When the Jacobian depends affinely on every coordinate and parameter that
//! varies over the region, an LMI that holds at every [`RegionVertex`] holds
//! everywhere in the region.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::RegionError;
use crate::geometry::{Point, Polygon};
use crate::interval::Interval;
use crate::models::{ParamPins, SystemModel};
use crate::ode::Trajectory;

/// Tolerance of the containment tests.
pub const CONTAINS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    /// Sequestration rate.
    pub eta: Option<Interval>,
    /// Slope of the saturating map.
    pub slope: Option<Interval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    /// State indices spanned by the polygon.
    pub coords: [usize; 2],
    pub polygon: Polygon,
    /// Bounds indexed by state coordinate; `None` marks an unconstrained
    /// coordinate. Entries for the polygon coordinates are ignored.
    pub x_box: Vec<Option<Interval>>,
    #[serde(default)]
    pub param_box: ParamBox,
    /// When above one, the `z1` range is split into this many strips and the
    /// saturation slope is bounded separately on each.
    #[serde(default)]
    pub slope_strips: usize,
}

/// A corner of the relaxed region: a state plus parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionVertex {
    pub xi: Vec<f64>,
    pub pins: ParamPins,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullOptions {
    /// Fraction of the time span discarded before collecting samples.
    pub transient_fraction: f64,
    /// Above this many vertices the exact hull is replaced by a circumscribed
    /// polygon with this many edges.
    pub max_vertices: usize,
}

impl Default for HullOptions {
    fn default() -> Self {
        Self {
            transient_fraction: 0.5,
            max_vertices: 16,
        }
    }
}

impl Region {
    /// Region in the controller plane of an `n`-dimensional model, other coordinates unconstrained.
    pub fn from_polygon(polygon: Polygon, n: usize) -> Result<Self, RegionError> {
        let region = Region {
            coords: [0, 1],
            polygon,
            x_box: vec![None; n],
            param_box: ParamBox::default(),
            slope_strips: 0,
        };
        region.validate()?;
        Ok(region)
    }

    pub fn validate(&self) -> Result<(), RegionError> {
        let n = self.x_box.len();
        if self.coords[0] == self.coords[1] || self.coords.iter().any(|&c| c >= n) {
            return Err(RegionError::Invalid(format!(
                "polygon coordinates {:?} do not fit a {n}-dimensional state",
                self.coords
            )));
        }
        let verts = self.polygon.vertices();
        if verts.is_empty() {
            return Err(RegionError::Empty);
        }
        let canonical = Polygon::from_vertices(verts.to_vec())
            .ok_or_else(|| RegionError::Invalid("polygon vertices are not in convex position".into()))?;
        if canonical.vertices() != verts && !self.polygon.is_degenerate() {
            // accept any rotation of the counterclockwise order
            let k = verts.len();
            let ccw = (0..k).any(|shift| (0..k).all(|i| verts[(i + shift) % k] == canonical.vertices()[i]));
            if !ccw {
                return Err(RegionError::Invalid("polygon vertices must be counterclockwise".into()));
            }
        }
        if verts.iter().flatten().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(RegionError::Invalid("polygon leaves the nonnegative quadrant".into()));
        }
        for (i, b) in self.x_box.iter().enumerate() {
            if let Some(b) = b {
                if Interval::new(b.lo, b.hi).is_none() || b.lo < 0.0 {
                    return Err(RegionError::Invalid(format!("bad bound [{}, {}] on coordinate {i}", b.lo, b.hi)));
                }
            }
        }
        for (name, iv) in [("eta", self.param_box.eta), ("slope", self.param_box.slope)] {
            if let Some(b) = iv {
                if Interval::new(b.lo, b.hi).is_none() {
                    return Err(RegionError::Invalid(format!("bad {name} interval [{}, {}]", b.lo, b.hi)));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.x_box.len()
    }

    pub fn with_eta(mut self, eta: Interval) -> Self {
        self.param_box.eta = Some(eta);
        self
    }

    pub fn with_slope(mut self, slope: Interval) -> Self {
        self.param_box.slope = Some(slope);
        self
    }

    pub fn with_slope_strips(mut self, strips: usize) -> Self {
        self.slope_strips = strips;
        self
    }

    pub fn with_bound(mut self, coord: usize, bound: Interval) -> Self {
        self.x_box[coord] = Some(bound);
        self
    }

    /// Bound every non-polygon coordinate by the range of the post-transient
    /// samples, widened by `margin` and clipped at zero.
    pub fn with_box_from(mut self, traj: &Trajectory, margin: f64, transient_fraction: f64) -> Result<Self, RegionError> {
        let start = traj.transient_cut(transient_fraction);
        let samples = &traj.states[start..];
        if samples.is_empty() {
            return Err(RegionError::Empty);
        }
        for c in 0..self.dim() {
            if self.coords.contains(&c) {
                continue;
            }
            let lo = samples.iter().map(|x| x[c]).fold(f64::INFINITY, f64::min);
            let hi = samples.iter().map(|x| x[c]).fold(f64::NEG_INFINITY, f64::max);
            self.x_box[c] = Some(Interval {
                lo: (lo - margin).max(0.0),
                hi: hi + margin,
            });
        }
        Ok(self)
    }

    /// Range of `xi[0]` over the region, if bounded.
    pub fn z1_range(&self) -> Option<Interval> {
        let (lo, hi) = self.polygon.bounds();
        if self.coords[0] == 0 {
            Some(Interval { lo: lo[0], hi: hi[0] })
        } else if self.coords[1] == 0 {
            Some(Interval { lo: lo[1], hi: hi[1] })
        } else {
            self.x_box[0]
        }
    }

    /// Record the model's slope range over the region's `z1` range in the parameter box.
    pub fn bind_slope<M: SystemModel + ?Sized>(mut self, model: &M) -> Result<Self, RegionError> {
        if model.dependence().saturating_slope && self.param_box.slope.is_none() {
            let z1 = self.z1_range().ok_or(RegionError::UnboundedCoordinate(0))?;
            self.param_box.slope = Some(model.slope_range(z1).ok_or(RegionError::MissingSlopeInterval)?);
        }
        Ok(self)
    }

    fn project(&self, xi: &[f64]) -> Point {
        [xi[self.coords[0]], xi[self.coords[1]]]
    }

    /// Boundary-inclusive membership of a state and, where given, of parameter values.
    pub fn contains(&self, xi: &[f64], pins: &ParamPins) -> bool {
        if xi.len() != self.dim() || !self.polygon.contains(self.project(xi), CONTAINS_TOL) {
            return false;
        }
        let in_box = self.x_box.iter().enumerate().all(|(i, b)| match b {
            Some(b) if !self.coords.contains(&i) => xi[i] >= b.lo - CONTAINS_TOL && xi[i] <= b.hi + CONTAINS_TOL,
            _ => true,
        });
        let in_param = |v: Option<f64>, iv: Option<Interval>| match (v, iv) {
            (Some(v), Some(iv)) => v >= iv.lo - CONTAINS_TOL && v <= iv.hi + CONTAINS_TOL,
            _ => true,
        };
        in_box && in_param(pins.eta, self.param_box.eta) && in_param(pins.slope, self.param_box.slope)
    }

    /// Coordinates outside the polygon on which the Jacobian depends.
    fn active_box_coords<M: SystemModel + ?Sized>(&self, model: &M) -> Result<Vec<usize>, RegionError> {
        if model.dim() != self.dim() {
            return Err(RegionError::Invalid(format!(
                "region is {}-dimensional, model is {}-dimensional",
                self.dim(),
                model.dim()
            )));
        }
        let dep = model.dependence();
        let mut active: Vec<usize> = [0usize, 1]
            .into_iter()
            .chain(dep.plant_coords)
            .filter(|c| *c < self.dim() && !self.coords.contains(c))
            .collect();
        active.sort_unstable();
        active.dedup();
        for &c in &active {
            if self.x_box[c].is_none() {
                return Err(RegionError::UnboundedCoordinate(c));
            }
        }
        Ok(active)
    }

    /// Polygon pieces with the slope interval that applies on each.
    fn slope_pieces<M: SystemModel + ?Sized>(&self, model: &M) -> Result<Vec<(Polygon, Option<Interval>)>, RegionError> {
        if !model.dependence().saturating_slope {
            return Ok(vec![(self.polygon.clone(), None)]);
        }
        if self.slope_strips > 1 {
            if self.coords[0] != 0 {
                return Err(RegionError::Invalid("slope strips need z1 as the first polygon coordinate".into()));
            }
            let z1 = self.z1_range().ok_or(RegionError::UnboundedCoordinate(0))?;
            let k = self.slope_strips;
            let mut pieces = Vec::with_capacity(k);
            for i in 0..k {
                let lo = z1.lo + z1.width() * i as f64 / k as f64;
                let hi = if i + 1 == k { z1.hi } else { z1.lo + z1.width() * (i + 1) as f64 / k as f64 };
                let Some(piece) = self.polygon.clip_strip_x(lo, hi) else {
                    continue;
                };
                let slope = model
                    .slope_range(Interval { lo, hi })
                    .ok_or(RegionError::MissingSlopeInterval)?;
                pieces.push((piece, Some(slope)));
            }
            return Ok(pieces);
        }
        let slope = match self.param_box.slope {
            Some(s) => s,
            None => {
                let z1 = self.z1_range().ok_or(RegionError::UnboundedCoordinate(0))?;
                model.slope_range(z1).ok_or(RegionError::MissingSlopeInterval)?
            }
        };
        Ok(vec![(self.polygon.clone(), Some(slope))])
    }

    fn base_state(&self) -> Vec<f64> {
        self.x_box.iter().map(|b| b.map_or(0.0, |b| b.mid())).collect()
    }

    /// Cartesian product of polygon vertices, box corners on active coordinates
    /// and parameter corners on active parameters.
    pub fn vertices<M: SystemModel + ?Sized>(&self, model: &M) -> Result<Vec<RegionVertex>, RegionError> {
        self.validate()?;
        let active = self.active_box_coords(model)?;
        let dep = model.dependence();
        let etas: Vec<Option<f64>> = match (dep.eta, self.param_box.eta) {
            (true, Some(iv)) => iv.corners().into_iter().map(Some).collect(),
            _ => vec![None],
        };
        let base = self.base_state();
        let box_corners = corner_product(&active, &self.x_box);
        let mut out = Vec::new();
        for (piece, slope) in self.slope_pieces(model)? {
            let slopes: Vec<Option<f64>> = match slope {
                Some(s) => s.corners().into_iter().map(Some).collect(),
                None => vec![None],
            };
            for v in piece.vertices() {
                for corner in &box_corners {
                    let mut xi = base.clone();
                    xi[self.coords[0]] = v[0];
                    xi[self.coords[1]] = v[1];
                    for (&c, &val) in active.iter().zip(corner) {
                        xi[c] = val;
                    }
                    for &eta in &etas {
                        for &slope in &slopes {
                            out.push(RegionVertex {
                                xi: xi.clone(),
                                pins: ParamPins { eta, slope },
                            });
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Interior spot-check points: a `density x density` grid over the polygon's
    /// bounding box (kept if inside), box coordinates at their ends and midpoint,
    /// the sequestration rate at its ends and midpoint. The slope is left free so
    /// that the model's own nonlinear Jacobian is evaluated.
    pub fn sample_points<M: SystemModel + ?Sized>(&self, model: &M, density: usize) -> Result<Vec<RegionVertex>, RegionError> {
        self.validate()?;
        let active = self.active_box_coords(model)?;
        let dep = model.dependence();
        let mut plane: Vec<Point> = self.polygon.vertices().to_vec();
        if density >= 2 {
            let (lo, hi) = self.polygon.bounds();
            for i in 0..density {
                for j in 0..density {
                    let p = [
                        lo[0] + (hi[0] - lo[0]) * i as f64 / (density - 1) as f64,
                        lo[1] + (hi[1] - lo[1]) * j as f64 / (density - 1) as f64,
                    ];
                    if self.polygon.contains(p, CONTAINS_TOL) {
                        plane.push(p);
                    }
                }
            }
        }
        let three = |iv: Interval| -> Vec<f64> {
            if iv.is_degenerate() {
                vec![iv.lo]
            } else {
                vec![iv.lo, iv.mid(), iv.hi]
            }
        };
        let etas: Vec<Option<f64>> = match (dep.eta, self.param_box.eta) {
            (true, Some(iv)) => three(iv).into_iter().map(Some).collect(),
            _ => vec![None],
        };
        let mut box_values: Vec<Vec<f64>> = vec![Vec::new()];
        for &c in &active {
            let vals = three(self.x_box[c].expect("active coordinates are bounded"));
            box_values = box_values
                .into_iter()
                .flat_map(|prefix| {
                    vals.iter().map(move |v| {
                        let mut next = prefix.clone();
                        next.push(*v);
                        next
                    })
                })
                .collect();
        }
        let base = self.base_state();
        let mut out = Vec::new();
        for p in plane {
            for vals in &box_values {
                let mut xi = base.clone();
                xi[self.coords[0]] = p[0];
                xi[self.coords[1]] = p[1];
                for (&c, &v) in active.iter().zip(vals) {
                    xi[c] = v;
                }
                for &eta in &etas {
                    out.push(RegionVertex {
                        xi: xi.clone(),
                        pins: ParamPins { eta, slope: None },
                    });
                }
            }
        }
        Ok(out)
    }

    /// `count` random points: convex combinations of polygon vertices, box
    /// coordinates and the sequestration rate uniform in their intervals.
    pub fn random_points<M: SystemModel + ?Sized, R: Rng>(
        &self,
        model: &M,
        count: usize,
        rng: &mut R,
    ) -> Result<Vec<RegionVertex>, RegionError> {
        self.validate()?;
        let active = self.active_box_coords(model)?;
        let dep = model.dependence();
        let verts = self.polygon.vertices();
        let base = self.base_state();
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let weights: Vec<f64> = verts.iter().map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let total: f64 = weights.iter().sum();
            let mut p = [0.0; 2];
            for (w, v) in weights.iter().zip(verts) {
                p[0] += w / total * v[0];
                p[1] += w / total * v[1];
            }
            let mut xi = base.clone();
            xi[self.coords[0]] = p[0];
            xi[self.coords[1]] = p[1];
            for &c in &active {
                let b = self.x_box[c].expect("active coordinates are bounded");
                xi[c] = b.lo + b.width() * rng.random::<f64>();
            }
            let eta = match (dep.eta, self.param_box.eta) {
                (true, Some(iv)) => Some(iv.lo + iv.width() * rng.random::<f64>()),
                _ => None,
            };
            out.push(RegionVertex {
                xi,
                pins: ParamPins { eta, slope: None },
            });
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("regions serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, RegionError> {
        let region: Region = serde_json::from_str(text).map_err(|e| RegionError::Invalid(e.to_string()))?;
        region.validate()?;
        Ok(region)
    }
}

fn corner_product(coords: &[usize], bounds: &[Option<Interval>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for &c in coords {
        let corners = bounds[c].expect("active coordinates are bounded").corners();
        out = out
            .into_iter()
            .flat_map(|prefix| {
                corners.iter().map(move |v| {
                    let mut next = prefix.clone();
                    next.push(*v);
                    next
                })
            })
            .collect();
    }
    out
}

/// Post-transient samples of several trajectories projected onto `coords`.
fn projected_samples(trajs: &[&Trajectory], coords: [usize; 2], transient_fraction: f64) -> Result<Vec<Point>, RegionError> {
    let mut pts = Vec::new();
    for traj in trajs {
        if coords.iter().any(|&c| c >= traj.dim()) {
            return Err(RegionError::Invalid(format!("coordinates {coords:?} exceed the state dimension")));
        }
        let start = traj.transient_cut(transient_fraction);
        pts.extend(traj.states[start..].iter().map(|x| [x[coords[0]], x[coords[1]]]));
    }
    if pts.is_empty() {
        return Err(RegionError::Empty);
    }
    Ok(pts)
}

/// `fraction` times the diagonal of the bounding box of the post-transient projection.
pub fn default_margin(
    trajs: &[&Trajectory],
    coords: [usize; 2],
    fraction: f64,
    transient_fraction: f64,
) -> Result<f64, RegionError> {
    let pts = projected_samples(trajs, coords, transient_fraction)?;
    let hull = Polygon::hull(&pts).ok_or(RegionError::Empty)?;
    let (lo, hi) = hull.bounds();
    Ok(fraction * (hi[0] - lo[0]).hypot(hi[1] - lo[1]))
}

/// Convex hull of the post-transient samples projected on `coords` (default
/// transient fraction and vertex cap), inflated by a square of half-width
/// `margin` and clipped to the nonnegative quadrant.
pub fn hull_of_trajectory(traj: &Trajectory, coords: [usize; 2], margin: f64) -> Result<Region, RegionError> {
    hull_of_trajectories(&[traj], coords, margin, &HullOptions::default())
}

/// Joint hull over several trajectories of the same model.
pub fn hull_of_trajectories(
    trajs: &[&Trajectory],
    coords: [usize; 2],
    margin: f64,
    opts: &HullOptions,
) -> Result<Region, RegionError> {
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(RegionError::Invalid(format!("margin must be nonnegative, got {margin}")));
    }
    let n = trajs.first().ok_or(RegionError::Empty)?.dim();
    if trajs.iter().any(|t| t.dim() != n) {
        return Err(RegionError::Invalid("trajectories of different dimensions".into()));
    }
    let pts = projected_samples(trajs, coords, opts.transient_fraction)?;
    let base = Polygon::hull(&pts).ok_or(RegionError::Empty)?;
    let mut polygon = if margin > 0.0 { base.inflate(margin) } else { base.clone() };
    if polygon.len() > opts.max_vertices.max(3) {
        polygon = base.outer_kgon(margin, opts.max_vertices.max(3));
    }
    let polygon = polygon.clip_nonnegative().ok_or(RegionError::Empty)?;
    Ok(Region {
        coords,
        polygon,
        x_box: vec![None; n],
        param_box: ParamBox::default(),
        slope_strips: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        closed_loop, AllSeqPlantParams, AllSequestration, ControllerParams, FirstOrderProduction, FopPlantParams,
        HillParams,
    };

    fn constant(x: Vec<f64>) -> Trajectory {
        let times: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let states = vec![x; 10];
        Trajectory::from_samples(times, states).unwrap()
    }

    fn fop() -> impl SystemModel {
        let cp = ControllerParams::new(2.0, 10.0).unwrap();
        let pp = FopPlantParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        closed_loop(cp, FirstOrderProduction::linear(pp).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn hull_of_constant_is_clipped_square() {
        let r = hull_of_trajectory(&constant(vec![2.0, 0.1, 2.0, 2.0]), [0, 1], 0.5).unwrap();
        let (lo, hi) = r.polygon.bounds();
        assert_eq!(lo, [1.5, 0.0]);
        assert_eq!(hi, [2.5, 0.6]);
        assert!(r.contains(&[2.0, 0.1, 2.0, 2.0], &ParamPins::default()));
        assert!(!r.contains(&[-0.1, 0.1, 2.0, 2.0], &ParamPins::default()));
    }

    #[test]
    fn zero_margin_hull_passes_through_samples() {
        let times: Vec<f64> = (0..4).map(|i| i as f64).collect();
        let states = vec![vec![1.0, 1.0], vec![2.0, 1.0], vec![2.0, 2.0], vec![1.0, 2.0]];
        let traj = Trajectory::from_samples(times, states).unwrap();
        let r = hull_of_trajectories(&[&traj], [0, 1], 0.0, &HullOptions { transient_fraction: 0.0, max_vertices: 16 }).unwrap();
        assert_eq!(r.polygon.len(), 4);
        assert!((r.polygon.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn linear_loop_vertices_are_polygon_vertices() {
        let r = hull_of_trajectory(&constant(vec![2.0, 0.1, 2.0, 2.0]), [0, 1], 0.05).unwrap();
        let v = r.vertices(&fop()).unwrap();
        assert_eq!(v.len(), r.polygon.len());
        let with_eta = r.clone().with_eta(Interval::new(7.0, 13.0).unwrap());
        assert_eq!(with_eta.vertices(&fop()).unwrap().len(), 2 * v.len());
        for x in with_eta.vertices(&fop()).unwrap() {
            assert!(with_eta.contains(&x.xi, &x.pins));
        }
    }

    #[test]
    fn all_sequestration_needs_plant_bounds() {
        let cp = ControllerParams::new(2.0, 10.0).unwrap();
        let plant = AllSequestration::new(AllSeqPlantParams::new(1.0, 1.0, 1.0, 1.0).unwrap()).unwrap();
        let m = closed_loop(cp, plant, 4.0).unwrap();
        let traj = constant(vec![0.5, 0.4, 2.0, 0.5]);
        let r = hull_of_trajectory(&traj, [0, 1], 0.05).unwrap();
        assert!(matches!(r.vertices(&m), Err(RegionError::UnboundedCoordinate(2))));
        let r = r.with_box_from(&traj, 0.1, 0.0).unwrap();
        assert_eq!(r.vertices(&m).unwrap().len(), 4 * r.polygon.len());
    }

    #[test]
    fn hill_loop_boxes_the_slope() {
        let cp = ControllerParams::new(2.0, 10.0).unwrap();
        let pp = FopPlantParams::new(1.0, 4.0, 1.0, 1.0).unwrap();
        let hill = HillParams::new(0.1, 1.0, 2).unwrap();
        let m = closed_loop(cp, FirstOrderProduction::hill(pp, hill).unwrap(), 4.0).unwrap();
        let r = hull_of_trajectory(&constant(vec![0.5, 0.4, 0.5, 0.5]), [0, 1], 0.4).unwrap();
        let v = r.vertices(&m).unwrap();
        assert_eq!(v.len(), 2 * r.polygon.len());
        let bound = r.clone().bind_slope(&m).unwrap().param_box.slope.unwrap();
        assert!((bound.hi - hill.max_slope().1).abs() < 1e-12);
        let strips = r.with_slope_strips(4).vertices(&m).unwrap();
        assert!(strips.iter().all(|x| x.pins.slope.unwrap() <= bound.hi + 1e-15));
    }

    #[test]
    fn json_round_trip() {
        let r = hull_of_trajectory(&constant(vec![2.0, 0.1, 2.0, 2.0]), [0, 1], 0.25)
            .unwrap()
            .with_eta(Interval::new(7.0, 13.0).unwrap());
        assert_eq!(Region::from_json(&r.to_json()).unwrap(), r);
    }
}
