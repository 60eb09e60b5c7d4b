use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DomainKind, DomainSpec, Point};

/// Smallest interior angle accepted by the mesh generator, in degrees.
pub const MIN_ANGLE_DEG: f64 = 15.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Boundary edges in counterclockwise order around the domain.
    pub boundary_edges: Vec<[usize; 2]>,
    /// Smallest triangle angle in degrees.
    #[serde(default)]
    pub min_angle: f64,
    /// Longest edge.
    #[serde(default)]
    pub h: f64,
}

fn angle_at(c: Point, a: Point, b: Point) -> f64 {
    let u = [a[0] - c[0], a[1] - c[1]];
    let v = [b[0] - c[0], b[1] - c[1]];
    (u[0] * v[1] - u[1] * v[0]).abs().atan2(u[0] * v[0] + u[1] * v[1])
}

fn signed_area(p: &[Point], t: [usize; 3]) -> f64 {
    let (a, b, c) = (p[t[0]], p[t[1]], p[t[2]]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn ccw(p: &[Point], t: [usize; 3]) -> [usize; 3] {
    if signed_area(p, t) < 0.0 {
        [t[0], t[2], t[1]]
    } else {
        t
    }
}

impl Mesh {
    /// Validate indices and orientation, and recompute quality data.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, boundary_edges: Vec<[usize; 2]>) -> Result<Self> {
        let n = vertices.len();
        if triangles.is_empty() {
            return Err(Error::MeshQuality("mesh has no triangles".into()));
        }
        if triangles.iter().flatten().chain(boundary_edges.iter().flatten()).any(|&i| i >= n) {
            return Err(Error::MeshQuality("vertex index out of range".into()));
        }
        if let Some(t) = triangles.iter().find(|t| !(signed_area(&vertices, **t) > 0.0)) {
            return Err(Error::MeshQuality(format!("triangle {t:?} is degenerate or clockwise")));
        }
        let mut mesh = Mesh { vertices, triangles, boundary_edges, min_angle: 0.0, h: 0.0 };
        mesh.update_quality();
        Ok(mesh)
    }

    fn update_quality(&mut self) {
        let p = &self.vertices;
        let mut min_angle = f64::INFINITY;
        let mut h: f64 = 0.0;
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b, c) = (p[t[k]], p[t[(k + 1) % 3]], p[t[(k + 2) % 3]]);
                min_angle = min_angle.min(angle_at(a, b, c));
                h = h.max((b[0] - a[0]).hypot(b[1] - a[1]));
            }
        }
        self.min_angle = min_angle.to_degrees();
        self.h = h;
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let raw: Mesh = serde_json::from_str(json)?;
        Self::new(raw.vertices, raw.triangles, raw.boundary_edges)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn area(&self) -> f64 {
        self.triangles.iter().map(|t| signed_area(&self.vertices, *t)).sum()
    }

    /// Lawson flips until every interior edge has opposite angles summing to
    /// at most π, which makes all interior cotangent weights non-negative.
    fn make_delaunay(&mut self) {
        let p = self.vertices.clone();
        for _ in 0..100 {
            let mut owners: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
            for (ti, t) in self.triangles.iter().enumerate() {
                for k in 0..3 {
                    let (a, b) = (t[k], t[(k + 1) % 3]);
                    owners.entry((a.min(b), a.max(b))).or_default().push((ti, t[(k + 2) % 3]));
                }
            }
            let mut touched = vec![false; self.triangles.len()];
            let mut flipped = 0;
            let mut keys: Vec<_> = owners.keys().copied().collect();
            keys.sort_unstable();
            for (a, b) in keys {
                let pair = &owners[&(a, b)];
                if pair.len() != 2 {
                    continue;
                }
                let ((t1, c), (t2, d)) = (pair[0], pair[1]);
                if touched[t1] || touched[t2] {
                    continue;
                }
                if angle_at(p[c], p[a], p[b]) + angle_at(p[d], p[a], p[b]) <= PI + 1e-12 {
                    continue;
                }
                let n1 = ccw(&p, [c, d, a]);
                let n2 = ccw(&p, [c, d, b]);
                if signed_area(&p, n1) <= 0.0 || signed_area(&p, n2) <= 0.0 {
                    continue;
                }
                self.triangles[t1] = n1;
                self.triangles[t2] = n2;
                touched[t1] = true;
                touched[t2] = true;
                flipped += 1;
            }
            if flipped == 0 {
                break;
            }
        }
    }
}

/// Graded polar triangulation of a star domain: ring `k` of `n_r` sits at
/// `(k/n_r)·ρ(θ)` with about `n_θ k/n_r` vertices, neighbouring rings are
/// stitched by an angular merge, and the centre is a fan. The mesh is
/// translated so the boundary centroid is the origin.
pub fn mesh_star(domain: &DomainSpec, n_r: usize, n_theta: usize) -> Result<Mesh> {
    if domain.kind != DomainKind::Star {
        return Err(Error::UnsupportedKind("polar meshing needs a star domain".into()));
    }
    if n_r < 8 || n_theta < 32 {
        return Err(Error::InvalidParams(format!(
            "mesh resolution ({n_r}, {n_theta}) below the minimum (8, 32)"
        )));
    }
    let c = domain.boundary_centroid();
    let shift = [domain.center[0] - c[0], domain.center[1] - c[1]];

    let mut vertices = vec![shift];
    let mut rings: Vec<(usize, usize)> = vec![(0, 1)];
    for k in 1..=n_r {
        let count = ((n_theta * k) as f64 / n_r as f64).round().clamp(6.0, n_theta as f64) as usize;
        let count = if k == n_r { n_theta } else { count };
        let start = vertices.len();
        for i in 0..count {
            let theta = 2.0 * PI * i as f64 / count as f64;
            let r = domain.radius_at(theta).expect("star domain") * k as f64 / n_r as f64;
            vertices.push([shift[0] + r * theta.cos(), shift[1] + r * theta.sin()]);
        }
        rings.push((start, count));
    }

    let mut triangles = Vec::new();
    let (first, n1) = rings[1];
    for i in 0..n1 {
        triangles.push(ccw(&vertices, [0, first + i, first + (i + 1) % n1]));
    }
    for k in 2..=n_r {
        let (sa, na) = rings[k - 1];
        let (sb, nb) = rings[k];
        let (mut i, mut j) = (0, 0);
        while i < na || j < nb {
            let next_a = (i + 1) as f64 / na as f64;
            let next_b = (j + 1) as f64 / nb as f64;
            if j >= nb || (i < na && next_a <= next_b) {
                triangles.push(ccw(&vertices, [sa + i, sa + (i + 1) % na, sb + j % nb]));
                i += 1;
            } else {
                triangles.push(ccw(&vertices, [sb + j, sb + (j + 1) % nb, sa + i % na]));
                j += 1;
            }
        }
    }

    let (sb, nb) = rings[n_r];
    let boundary_edges = (0..nb).map(|i| [sb + i, sb + (i + 1) % nb]).collect();
    let mut mesh = Mesh::new(vertices, triangles, boundary_edges)?;
    mesh.make_delaunay();
    mesh.update_quality();
    if mesh.min_angle < MIN_ANGLE_DEG {
        return Err(Error::MeshQuality(format!(
            "smallest angle {:.2}° is below {MIN_ANGLE_DEG}°; increase n_theta",
            mesh.min_angle
        )));
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_mesh_quality_and_area() {
        let d = DomainSpec::disk(1.0, 256).unwrap();
        let m = mesh_star(&d, 16, 64).unwrap();
        assert!(m.min_angle > MIN_ANGLE_DEG, "{}", m.min_angle);
        assert_eq!(m.boundary_edges.len(), 64);
        let polygon_area = 0.5 * 64.0 * (2.0 * PI / 64.0).sin();
        assert!((m.area() - polygon_area).abs() < 1e-12);
        // Euler: V − E + F = 1 for a disk triangulation
        let interior = m.triangles.len() * 3 - m.boundary_edges.len();
        let edges = interior / 2 + m.boundary_edges.len();
        assert_eq!(m.vertices.len() + m.triangles.len() - edges, 1);
    }

    #[test]
    fn ellipse_mesh_is_valid() {
        let d = DomainSpec::ellipse(1.2, 0.8, 512).unwrap();
        let m = mesh_star(&d, 16, 64).unwrap();
        assert!(m.min_angle > MIN_ANGLE_DEG);
    }

    #[test]
    fn eccentric_ellipse_is_rejected() {
        let d = DomainSpec::ellipse(3.0, 0.2, 512).unwrap();
        assert!(matches!(mesh_star(&d, 16, 64), Err(Error::MeshQuality(_))));
    }

    #[test]
    fn json_round_trip() {
        let d = DomainSpec::disk(1.0, 128).unwrap();
        let m = mesh_star(&d, 8, 32).unwrap();
        let back = Mesh::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back.triangles, m.triangles);
        assert!((back.min_angle - m.min_angle).abs() < 1e-12);
        assert!(Mesh::from_json(r#"{"vertices":[[0,0]],"triangles":[[0,1,2]],"boundary_edges":[]}"#).is_err());
    }
}
