//! Independent two-dimensional solver for the lowest magnetic Robin
//! eigenvalue on star domains.

mod assembly;
mod eigen;
mod mesh;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{DomainSpec, Point};

pub use assembly::{assemble_magnetic_robin, MagneticPair};
pub use eigen::{lowest_eig, EigenOptions, FemResult};
pub use mesh::{mesh_star, Mesh, MIN_ANGLE_DEG};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshResolution {
    pub n_r: usize,
    pub n_theta: usize,
}

impl Default for MeshResolution {
    fn default() -> Self {
        MeshResolution { n_r: 32, n_theta: 128 }
    }
}

impl MeshResolution {
    pub fn refined(self) -> Self {
        MeshResolution { n_r: 2 * self.n_r, n_theta: 2 * self.n_theta }
    }
}

/// Mesh, assemble and solve in one call.
pub fn solve_domain(
    domain: &DomainSpec,
    b: f64,
    beta: f64,
    resolution: MeshResolution,
    gauge: Option<&(dyn Fn(Point) -> f64 + Sync)>,
    options: &EigenOptions,
) -> Result<FemResult> {
    let mesh = mesh_star(domain, resolution.n_r, resolution.n_theta)?;
    let pair = assemble_magnetic_robin(&mesh, b, beta, gauge);
    lowest_eig(&pair, mesh.h, options)
}

/// `λ₁` on nested resolutions with the second-order Richardson value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinedEigenvalue {
    /// Solve at half the requested resolution, when that is still allowed.
    pub coarsest: Option<f64>,
    pub coarse: f64,
    pub fine: f64,
    /// `(4·fine − coarse)/3`.
    pub extrapolated: f64,
    /// Distance between the two Richardson values when three levels exist,
    /// `|fine − coarse|/3` otherwise.
    pub error_estimate: f64,
    /// Observed convergence order over the three levels.
    pub order: Option<f64>,
}

pub fn solve_domain_refined(
    domain: &DomainSpec,
    b: f64,
    beta: f64,
    resolution: MeshResolution,
    options: &EigenOptions,
) -> Result<RefinedEigenvalue> {
    let solve = |res: MeshResolution| solve_domain(domain, b, beta, res, None, options).map(|r| r.lambda1);
    let half = MeshResolution { n_r: resolution.n_r / 2, n_theta: resolution.n_theta / 2 };
    let coarsest = if half.n_r >= 8 && half.n_theta >= 32 && half.refined() == resolution {
        Some(solve(half)?)
    } else {
        None
    };
    let coarse = solve(resolution)?;
    let fine = solve(resolution.refined())?;
    let extrapolated = (4.0 * fine - coarse) / 3.0;
    let (error_estimate, order) = match coarsest {
        Some(c0) => (
            ((4.0 * coarse - c0) / 3.0 - extrapolated).abs(),
            Some(((c0 - coarse) / (coarse - fine)).abs().log2()),
        ),
        None => ((fine - coarse).abs() / 3.0, None),
    };
    Ok(RefinedEigenvalue { coarsest, coarse, fine, extrapolated, error_estimate, order })
}
