//! Planar convex polygons.

use serde::{Deserialize, Serialize};

pub type Point = [f64; 2];

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex polygon with counterclockwise vertices. One or two vertices encode a
/// degenerate point or segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    /// Convex hull of `points` (Andrew's monotone chain). Collinear points are dropped.
    pub fn hull(points: &[Point]) -> Option<Self> {
        let mut pts: Vec<Point> = points.iter().copied().filter(|p| p[0].is_finite() && p[1].is_finite()).collect();
        if pts.is_empty() {
            return None;
        }
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        pts.dedup();
        if pts.len() < 3 {
            return Some(Self { vertices: pts });
        }
        let mut lower: Vec<Point> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<Point> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        Some(Self { vertices: lower })
    }

    /// Polygon from vertices that are already in convex position; reorders to
    /// counterclockwise and rejects non-convex input.
    pub fn from_vertices(vertices: Vec<Point>) -> Option<Self> {
        let hull = Self::hull(&vertices)?;
        let mut unique = vertices.clone();
        unique.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        unique.dedup();
        (hull.vertices.len() == unique.len()).then_some(hull)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_degenerate(&self) -> bool {
        self.vertices.len() < 3
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        0.5 * (0..n)
            .map(|i| {
                let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
    }

    /// `([min_x, min_y], [max_x, max_y])`.
    pub fn bounds(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    /// Boundary-inclusive membership with absolute tolerance `tol` on each edge test.
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        match self.vertices.len() {
            0 => false,
            1 => {
                let v = self.vertices[0];
                (p[0] - v[0]).abs() <= tol && (p[1] - v[1]).abs() <= tol
            }
            2 => {
                let (a, b) = (self.vertices[0], self.vertices[1]);
                let d = [b[0] - a[0], b[1] - a[1]];
                let len2 = d[0] * d[0] + d[1] * d[1];
                let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
                let q = [a[0] + t * d[0], a[1] + t * d[1]];
                (p[0] - q[0]).hypot(p[1] - q[1]) <= tol
            }
            n => (0..n).all(|i| {
                let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                cross(a, b, p) >= -tol * len
            }),
        }
    }

    /// Intersection with the half-plane `normal . p <= offset` (Sutherland-Hodgman).
    pub fn clip(&self, normal: Point, offset: f64) -> Option<Self> {
        let inside = |p: Point| normal[0] * p[0] + normal[1] * p[1] <= offset;
        let n = self.vertices.len();
        if n == 0 {
            return None;
        }
        if n == 1 {
            return inside(self.vertices[0]).then(|| self.clone());
        }
        let mut out = Vec::new();
        let edges = if n == 2 { 1 } else { n };
        for i in 0..edges {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let (ina, inb) = (inside(a), inside(b));
            if ina {
                out.push(a);
            }
            if ina != inb {
                let fa = normal[0] * a[0] + normal[1] * a[1] - offset;
                let fb = normal[0] * b[0] + normal[1] * b[1] - offset;
                let t = fa / (fa - fb);
                out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
        if n == 2 && inside(self.vertices[1]) {
            out.push(self.vertices[1]);
        }
        Self::hull(&out)
    }

    /// Intersection with the nonnegative quadrant.
    pub fn clip_nonnegative(&self) -> Option<Self> {
        self.clip([-1.0, 0.0], 0.0)?.clip([0.0, -1.0], 0.0)
    }

    /// Intersection with the vertical strip `lo <= x <= hi`.
    pub fn clip_strip_x(&self, lo: f64, hi: f64) -> Option<Self> {
        self.clip([-1.0, 0.0], -lo)?.clip([1.0, 0.0], hi)
    }

    /// Minkowski sum with the square `[-m, m]^2`.
    pub fn inflate(&self, m: f64) -> Self {
        let pts: Vec<Point> = self
            .vertices
            .iter()
            .flat_map(|v| [[v[0] - m, v[1] - m], [v[0] + m, v[1] - m], [v[0] + m, v[1] + m], [v[0] - m, v[1] + m]])
            .collect();
        Self::hull(&pts).expect("inflating a nonempty polygon")
    }

    /// Circumscribed polygon of `self` inflated by the square `[-m, m]^2`, with `k`
    /// evenly spaced edge normals. Every edge supports the inflated set, so the
    /// result contains it.
    pub fn outer_kgon(&self, m: f64, k: usize) -> Self {
        assert!(k >= 3, "outer polygon needs at least three edges");
        let dirs: Vec<(Point, f64)> = (0..k)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / k as f64;
                let d = [a.cos(), a.sin()];
                let support = self
                    .vertices
                    .iter()
                    .map(|v| d[0] * v[0] + d[1] * v[1])
                    .fold(f64::NEG_INFINITY, f64::max);
                (d, support + m * (d[0].abs() + d[1].abs()))
            })
            .collect();
        let pts: Vec<Point> = (0..k)
            .map(|i| {
                let (d1, h1) = dirs[i];
                let (d2, h2) = dirs[(i + 1) % k];
                let det = d1[0] * d2[1] - d1[1] * d2[0];
                [(h1 * d2[1] - h2 * d1[1]) / det, (d1[0] * h2 - d2[0] * h1) / det]
            })
            .collect();
        Self::hull(&pts).expect("outer polygon is nonempty")
    }
}
