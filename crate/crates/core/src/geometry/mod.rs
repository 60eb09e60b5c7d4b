//! Planar domains, distance-to-boundary level sets and the moment conditions
//! built on them.

mod contour;
mod curvature;
mod distance;
mod subordinacy;

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use contour::{default_levels, level_curves, LevelCurveTable, LevelRow};
pub use curvature::{curvature_max, CurvatureReport};
pub use distance::{distance_field, inradius, DistanceField};
pub use subordinacy::{
    hurwitz_gap, subordinacy_check, HurwitzGap, SubordinacyOptions, SubordinacyReport,
    SubordinacyVerdict, X0Policy,
};

pub type Point = [f64; 2];

/// Default number of boundary vertices when a star domain is densified.
pub const DEFAULT_STAR_SAMPLES: usize = 1024;

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

pub(crate) fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// A polyline, closed when the last point connects back to the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<Point>,
    pub closed: bool,
}

impl Polyline {
    pub fn closed(points: Vec<Point>) -> Self {
        Polyline { points, closed: true }
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.points.len();
        let count = if self.closed { n } else { n.saturating_sub(1) };
        (0..count).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(p, q)| norm(sub(q, p))).sum()
    }

    /// Arc-length centroid.
    pub fn centroid(&self) -> Point {
        let mut c = [0.0, 0.0];
        let mut total = 0.0;
        for (p, q) in self.segments() {
            let l = norm(sub(q, p));
            c[0] += 0.5 * l * (p[0] + q[0]);
            c[1] += 0.5 * l * (p[1] + q[1]);
            total += l;
        }
        [c[0] / total, c[1] / total]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Polygon,
    Star,
}

/// Serialized domain description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainInput {
    pub kind: DomainKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_samples: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Point>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainMetadata {
    pub perimeter: f64,
    pub area: f64,
    /// Arc-length centroid of the boundary.
    pub boundary_centroid: Point,
    pub inradius: f64,
}

/// A validated simply connected domain with a counterclockwise polygonal
/// boundary. Star domains keep their radius samples for curvature work.
#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub name: Option<String>,
    pub boundary: Polyline,
    pub center: Point,
    pub radius_samples: Option<Vec<f64>>,
    perimeter: f64,
    area: f64,
    boundary_centroid: Point,
    inradius: OnceLock<f64>,
}

impl DomainSpec {
    pub fn polygon(vertices: Vec<Point>) -> Result<Self> {
        let mut vertices = vertices;
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::InvalidDomain("a polygon needs at least 3 vertices".into()));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDomain("non-finite vertex coordinate".into()));
        }
        let mut area = signed_area(&vertices);
        if area < 0.0 {
            vertices.reverse();
            area = -area;
        }
        if !(area > 0.0) {
            return Err(Error::InvalidDomain("polygon has zero area".into()));
        }
        if let Some((i, j)) = first_self_intersection(&vertices) {
            return Err(Error::InvalidDomain(format!("edges {i} and {j} intersect")));
        }
        let boundary = Polyline::closed(vertices);
        let c = boundary.centroid();
        Ok(DomainSpec {
            kind: DomainKind::Polygon,
            name: None,
            perimeter: boundary.length(),
            area,
            boundary_centroid: c,
            center: c,
            boundary,
            radius_samples: None,
            inradius: OnceLock::new(),
        })
    }

    /// Star domain `{center + r(cos θ, sin θ) : r < ρ(θ)}` from samples of `ρ` on
    /// the uniform grid `θⱼ = 2πj/N`, densified to `dense` boundary vertices.
    pub fn star(center: Point, radius_samples: Vec<f64>, dense: usize) -> Result<Self> {
        let n = radius_samples.len();
        if n < 8 {
            return Err(Error::InvalidDomain(format!("need at least 8 radius samples, got {n}")));
        }
        if let Some(bad) = radius_samples.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::InvalidDomain(format!("radius samples must be positive, found {bad}")));
        }
        if dense < 8 {
            return Err(Error::InvalidDomain("densification needs at least 8 vertices".into()));
        }
        let vertices = (0..dense)
            .map(|k| {
                let theta = 2.0 * PI * k as f64 / dense as f64;
                let r = periodic_cubic(&radius_samples, theta * n as f64 / (2.0 * PI));
                [center[0] + r * theta.cos(), center[1] + r * theta.sin()]
            })
            .collect();
        let mut d = Self::polygon(vertices)?;
        d.kind = DomainKind::Star;
        d.center = center;
        d.radius_samples = Some(radius_samples);
        Ok(d)
    }

    pub fn from_input(input: &DomainInput, star_samples: usize) -> Result<Self> {
        let mut d = match input.kind {
            DomainKind::Polygon => {
                let v = input.vertices.clone().ok_or_else(|| {
                    Error::InvalidDomain("polygon domain needs `vertices`".into())
                })?;
                Self::polygon(v)?
            }
            DomainKind::Star => {
                let s = input.radius_samples.clone().ok_or_else(|| {
                    Error::InvalidDomain("star domain needs `radius_samples`".into())
                })?;
                Self::star(input.center.unwrap_or([0.0, 0.0]), s, star_samples)?
            }
        };
        d.name = input.name.clone();
        Ok(d)
    }

    pub fn to_input(&self) -> DomainInput {
        match self.kind {
            DomainKind::Star => DomainInput {
                kind: DomainKind::Star,
                center: Some(self.center),
                radius_samples: self.radius_samples.clone(),
                vertices: None,
                name: self.name.clone(),
            },
            DomainKind::Polygon => DomainInput {
                kind: DomainKind::Polygon,
                center: None,
                radius_samples: None,
                vertices: Some(self.boundary.points.clone()),
                name: self.name.clone(),
            },
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Disk of radius `r` centred at the origin, as a star domain.
    pub fn disk(r: f64, samples: usize) -> Result<Self> {
        Self::star([0.0, 0.0], vec![r; samples], samples)
    }

    /// Ellipse with semi-axes `a` (along x) and `b`, centred at the origin.
    pub fn ellipse(a: f64, b: f64, samples: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidDomain(format!("ellipse semi-axes must be positive: {a}, {b}")));
        }
        let rho = (0..samples)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / samples as f64;
                a * b / ((b * t.cos()).powi(2) + (a * t.sin()).powi(2)).sqrt()
            })
            .collect();
        Self::star([0.0, 0.0], rho, samples)
    }

    /// Superellipse `|x|^p + |y|^p = s^p`, a square with rounded corners.
    pub fn rounded_square(half_side: f64, p: f64, samples: usize) -> Result<Self> {
        if !(p >= 2.0) {
            return Err(Error::InvalidDomain(format!("superellipse exponent must be >= 2, got {p}")));
        }
        let rho = (0..samples)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / samples as f64;
                half_side / (t.cos().abs().powf(p) + t.sin().abs().powf(p)).powf(1.0 / p)
            })
            .collect();
        Self::star([0.0, 0.0], rho, samples)
    }

    /// Centrally symmetric convex polygon (a zonogon) with edge vectors
    /// `g₁, …, g_k, −g₁, …, −g_k` taken in order of angle. Generators are
    /// mapped to the upper half plane first; zero vectors are dropped.
    pub fn zonogon(generators: &[Point]) -> Result<Self> {
        let mut g: Vec<Point> = generators
            .iter()
            .filter(|v| norm(**v) > 0.0)
            .map(|v| if v[1] < 0.0 || (v[1] == 0.0 && v[0] < 0.0) { [-v[0], -v[1]] } else { *v })
            .collect();
        if g.len() < 2 {
            return Err(Error::InvalidDomain("a zonogon needs two non-zero generators".into()));
        }
        g.sort_by(|a, b| a[1].atan2(a[0]).total_cmp(&b[1].atan2(b[0])));
        let edges: Vec<Point> = g.iter().copied().chain(g.iter().map(|v| [-v[0], -v[1]])).collect();
        let mut p = [0.0, 0.0];
        let mut vertices = Vec::with_capacity(edges.len());
        for e in &edges {
            vertices.push(p);
            p = [p[0] + e[0], p[1] + e[1]];
        }
        let c = Polyline::closed(vertices.clone()).centroid();
        Self::polygon(vertices.into_iter().map(|v| sub(v, c)).collect())
    }

    /// The same domain scaled about the origin.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidDomain(format!("scale factor must be positive, got {factor}")));
        }
        let dense = self.boundary.points.len();
        let mut d = match self.kind {
            DomainKind::Star => Self::star(
                [self.center[0] * factor, self.center[1] * factor],
                self.radius_samples.as_ref().unwrap().iter().map(|r| r * factor).collect(),
                dense,
            )?,
            DomainKind::Polygon => Self::polygon(
                self.boundary.points.iter().map(|p| [p[0] * factor, p[1] * factor]).collect(),
            )?,
        };
        d.name = self.name.clone();
        Ok(d)
    }

    /// Scale so that the boundary has length `perimeter`.
    pub fn with_perimeter(&self, perimeter: f64) -> Result<Self> {
        self.scaled(perimeter / self.perimeter)
    }

    pub fn translated(&self, shift: Point) -> Result<Self> {
        let mut d = self.clone();
        for p in d.boundary.points.iter_mut() {
            p[0] += shift[0];
            p[1] += shift[1];
        }
        d.center = [d.center[0] + shift[0], d.center[1] + shift[1]];
        d.boundary_centroid = [d.boundary_centroid[0] + shift[0], d.boundary_centroid[1] + shift[1]];
        Ok(d)
    }

    /// `ρ(θ)` of a star domain, interpolated from its samples.
    pub fn radius_at(&self, theta: f64) -> Option<f64> {
        let s = self.radius_samples.as_ref()?;
        Some(periodic_cubic(s, theta.rem_euclid(2.0 * PI) * s.len() as f64 / (2.0 * PI)))
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn boundary_centroid(&self) -> Point {
        self.boundary_centroid
    }

    /// Radius of the disk with the same perimeter.
    pub fn matched_radius(&self) -> f64 {
        self.perimeter / (2.0 * PI)
    }

    /// In-radius from a distance field with spacing `R/256`, computed once.
    pub fn inradius(&self) -> f64 {
        *self.inradius.get_or_init(|| {
            let h = self.matched_radius() / 256.0;
            distance_field(self, h)
                .map(|f| inradius(&f))
                .unwrap_or(f64::NAN)
        })
    }

    pub fn metadata(&self) -> DomainMetadata {
        DomainMetadata {
            perimeter: self.perimeter,
            area: self.area,
            boundary_centroid: self.boundary_centroid,
            inradius: self.inradius(),
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.boundary.points
    }

    /// Even-odd point-in-polygon test.
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.boundary.segments() {
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if x > p[0] {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Convexity with relative tolerance `tol` on turning cross products.
    pub fn is_convex(&self, tol: f64) -> bool {
        let v = &self.boundary.points;
        let n = v.len();
        (0..n).all(|i| {
            let e1 = sub(v[(i + 1) % n], v[i]);
            let e2 = sub(v[(i + 2) % n], v[(i + 1) % n]);
            cross(e1, e2) >= -tol * norm(e1) * norm(e2)
        })
    }
}

/// Parse and validate a domain from its JSON description.
pub fn load_domain(json: &str) -> Result<DomainSpec> {
    let input: DomainInput = serde_json::from_str(json)?;
    DomainSpec::from_input(&input, DEFAULT_STAR_SAMPLES)
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| cross(v[i], v[(i + 1) % n])).sum::<f64>()
}

/// 4-point periodic Lagrange interpolation at fractional index `x`.
fn periodic_cubic(samples: &[f64], x: f64) -> f64 {
    let n = samples.len() as i64;
    let base = x.floor();
    let frac = x - base;
    let i = base as i64;
    let at = |k: i64| samples[k.rem_euclid(n) as usize];
    let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
    let t = frac;
    -t * (t - 1.0) * (t - 2.0) / 6.0 * p0 + (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0 * p1
        - (t + 1.0) * t * (t - 2.0) / 2.0 * p2
        + (t + 1.0) * t * (t - 1.0) / 6.0 * p3
}

fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = cross(sub(b, a), sub(c, a));
    let o2 = cross(sub(b, a), sub(d, a));
    let o3 = cross(sub(d, c), sub(a, c));
    let o4 = cross(sub(d, c), sub(b, c));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    let on = |p: Point, q: Point, r: Point, o: f64| {
        o == 0.0
            && r[0] >= p[0].min(q[0])
            && r[0] <= p[0].max(q[0])
            && r[1] >= p[1].min(q[1])
            && r[1] <= p[1].max(q[1])
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

/// Non-adjacent edge pair that intersects, found by a sweep over x-extents.
fn first_self_intersection(v: &[Point]) -> Option<(usize, usize)> {
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    let lo = |i: usize| v[i][0].min(v[(i + 1) % n][0]);
    let hi = |i: usize| v[i][0].max(v[(i + 1) % n][0]);
    order.sort_by(|&a, &b| lo(a).total_cmp(&lo(b)));
    let mut active: Vec<usize> = Vec::new();
    for &i in &order {
        active.retain(|&j| hi(j) >= lo(i));
        for &j in &active {
            let adjacent = (i + 1) % n == j || (j + 1) % n == i;
            if adjacent {
                continue;
            }
            if segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return Some((i.min(j), i.max(j)));
            }
        }
        active.push(i);
    }
    None
}
