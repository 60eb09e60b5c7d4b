use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use super::Mesh;
use crate::geometry::Point;

/// Hermitian stiffness `K` and lumped mass `M` of the magnetic Robin form.
///
/// Edges carry cotangent weights and the phase of `A = ½(−x₂, x₁)` (plus an
/// optional gauge `∇φ`) integrated along the edge, so
///
/// ```text
/// uᴴKu = Σ_edges w_jk |e^{−iθ_jk} u_k − u_j|² + β Σ_boundary ℓ/2 (|u_j|² + |u_k|²)
/// ```
#[derive(Debug, Clone)]
pub struct MagneticPair {
    pub diag: Vec<f64>,
    /// `(j, k, K_jk)` with `j < k`; `K_kj` is the conjugate.
    pub edges: Vec<(usize, usize, Complex64)>,
    pub mass: Vec<f64>,
}

impl MagneticPair {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, u: &[Complex64]) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = self.diag.iter().zip(u).map(|(d, x)| x * d).collect();
        for &(j, k, w) in &self.edges {
            out[j] += w * u[k];
            out[k] += w.conj() * u[j];
        }
        out
    }

    pub fn quadratic_form(&self, u: &[Complex64]) -> f64 {
        self.apply(u).iter().zip(u).map(|(a, x)| (x.conj() * a).re).sum()
    }

    pub fn mass_norm_sq(&self, u: &[Complex64]) -> f64 {
        self.mass.iter().zip(u).map(|(m, x)| m * x.norm_sqr()).sum()
    }
}

/// Assemble the magnetic Robin pair with field `b`, boundary parameter `beta`
/// and optional gauge function `phi`.
pub fn assemble_magnetic_robin(
    mesh: &Mesh,
    b: f64,
    beta: f64,
    gauge: Option<&(dyn Fn(Point) -> f64 + Sync)>,
) -> MagneticPair {
    let p = &mesh.vertices;
    let n = p.len();

    let local: Vec<([(usize, usize, f64); 3], [f64; 3], f64)> = mesh
        .triangles
        .par_iter()
        .map(|t| {
            let area = 0.5
                * ((p[t[1]][0] - p[t[0]][0]) * (p[t[2]][1] - p[t[0]][1])
                    - (p[t[1]][1] - p[t[0]][1]) * (p[t[2]][0] - p[t[0]][0]));
            let mut w = [(0, 0, 0.0); 3];
            for k in 0..3 {
                let (a, bb, c) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
                // half the cotangent of the angle at c, opposite edge (a, bb)
                let u = [p[a][0] - p[c][0], p[a][1] - p[c][1]];
                let v = [p[bb][0] - p[c][0], p[bb][1] - p[c][1]];
                let cot = (u[0] * v[0] + u[1] * v[1]) / (u[0] * v[1] - u[1] * v[0]).abs();
                w[k] = (a.min(bb), a.max(bb), 0.5 * cot);
            }
            (w, [area / 3.0; 3], area)
        })
        .collect();

    let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut mass = vec![0.0; n];
    for (t, (w, m, _)) in mesh.triangles.iter().zip(&local) {
        for k in 0..3 {
            *weights.entry((w[k].0, w[k].1)).or_insert(0.0) += w[k].2;
            mass[t[k]] += m[k];
        }
    }

    let phi: Vec<f64> = match gauge {
        Some(f) => p.iter().map(|&x| f(x)).collect(),
        None => vec![0.0; n],
    };
    let mut diag = vec![0.0; n];
    let edges = weights
        .into_iter()
        .map(|((j, k), w)| {
            let cross = p[j][0] * p[k][1] - p[j][1] * p[k][0];
            let theta = b * (0.5 * cross + phi[k] - phi[j]);
            diag[j] += w;
            diag[k] += w;
            (j, k, -w * Complex64::from_polar(1.0, -theta))
        })
        .collect();
    for e in &mesh.boundary_edges {
        let (a, c) = (p[e[0]], p[e[1]]);
        let half = 0.5 * (c[0] - a[0]).hypot(c[1] - a[1]);
        diag[e[0]] += beta * half;
        diag[e[1]] += beta * half;
    }
    MagneticPair { diag, edges, mass }
}
