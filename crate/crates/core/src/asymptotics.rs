//! Strong-coupling expansions of the ground energy as `β → −∞` and the
//! dilation identity of the disk.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{solve_domain_refined, EigenOptions, MeshResolution};
use crate::geometry::{curvature_max, norm, DomainSpec};
use crate::radial::{check_disk_params, disk_ground, RadialConfig};

/// `e(b, R) = −½ + min_m (m − bR²/2)²`.
pub fn e_term(b: f64, radius: f64) -> f64 {
    let c = 0.5 * b * radius * radius;
    let gap = (c - c.floor()).min(c.ceil() - c);
    -0.5 + gap * gap
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpansionCheck {
    pub beta_sequence: Vec<f64>,
    pub predicted: Vec<f64>,
    pub computed: Vec<f64>,
    /// Remainder after the explicit terms, divided by its claimed size.
    pub residual_scaled: Vec<f64>,
}

impl ExpansionCheck {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("beta,computed,predicted,residual_scaled\n");
        for k in 0..self.beta_sequence.len() {
            let _ = writeln!(
                out,
                "{:.11e},{:.11e},{:.11e},{:.11e}",
                self.beta_sequence[k], self.computed[k], self.predicted[k], self.residual_scaled[k]
            );
        }
        out
    }

    /// `|residual_scaled|` at the most negative `β`.
    pub fn last_deviation(&self) -> f64 {
        self.residual_scaled.last().map_or(f64::NAN, |r| r.abs())
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.residual_scaled.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

fn check_sequence(betas: &[f64]) -> Result<()> {
    if betas.is_empty() {
        return Err(Error::InvalidParams("empty beta sequence".into()));
    }
    if betas.iter().any(|b| !(*b < 0.0) || !b.is_finite()) {
        return Err(Error::InvalidParams("beta sequence must be negative".into()));
    }
    if betas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParams("beta sequence must be strictly decreasing".into()));
    }
    Ok(())
}

/// Disk energy extrapolated from `n` and `2n` nodes per fiber.
pub fn disk_lambda_extrapolated(radius: f64, b: f64, beta: f64, config: &RadialConfig) -> Result<f64> {
    let coarse = disk_ground(radius, b, beta, config)?.lambda1;
    let fine = disk_ground(radius, b, beta, &RadialConfig { n: 2 * config.n })?.lambda1;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Compare the disk energy with `−β² + β/R + e(b,R)/R²`; the scaled residual
/// is `R²(λ₁ + β² − β/R) − e(b,R)`, which tends to zero.
pub fn disk_expansion_check(radius: f64, b: f64, betas: &[f64], config: &RadialConfig) -> Result<ExpansionCheck> {
    check_sequence(betas)?;
    check_disk_params(radius, b, betas[0])?;
    let e = e_term(b, radius);
    let computed: Vec<f64> = betas
        .par_iter()
        .map(|&beta| disk_lambda_extrapolated(radius, b, beta, config))
        .collect::<Result<_>>()?;
    let predicted: Vec<f64> = betas.iter().map(|&beta| -beta * beta + beta / radius + e / (radius * radius)).collect();
    let residual_scaled = betas
        .iter()
        .zip(&computed)
        .map(|(&beta, &l)| radius * radius * (l + beta * beta - beta / radius) - e)
        .collect();
    Ok(ExpansionCheck { beta_sequence: betas.to_vec(), predicted, computed, residual_scaled })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainExpansionCheck {
    pub expansion: ExpansionCheck,
    pub kappa_max: f64,
    /// `max |A|²` over the domain, with `A` centred at the boundary centroid.
    pub a_max_sq: f64,
    /// Field and field-free energies on the same fine mesh.
    pub fine_with_field: Vec<f64>,
    /// `λ₁^{β,0}` per `β`.
    pub lower: Vec<f64>,
    /// `λ₁^{β,0} + b² max|A|²` per `β`.
    pub upper: Vec<f64>,
    /// Richardson error estimates of the field and field-free solves.
    pub error_estimates: Vec<f64>,
    pub sandwich_holds: bool,
}

/// FEM energies along `betas` against `−β² + βκ_max`, scaled by `|β|^{2/3}`,
/// together with the diamagnetic and perturbative bounds.
///
/// The boundary layer has width about `1/|β|` and the mesh is not graded
/// towards the boundary, so sequences beyond `β = −20` are rejected.
pub fn domain_expansion_check(
    domain: &DomainSpec,
    b: f64,
    betas: &[f64],
    resolution: MeshResolution,
    options: &EigenOptions,
) -> Result<DomainExpansionCheck> {
    check_sequence(betas)?;
    if let Some(beta) = betas.iter().find(|b| **b < -20.0) {
        return Err(Error::InvalidParams(format!("beta = {beta} is beyond the FEM cap of -20")));
    }
    if !(b >= 0.0) {
        return Err(Error::InvalidParams(format!("b must be non-negative, got {b}")));
    }
    let kappa = curvature_max(domain)?.kappa_max;
    let c = domain.boundary_centroid();
    let reach = domain.vertices().iter().map(|p| norm([p[0] - c[0], p[1] - c[1]])).fold(0.0, f64::max);
    let a_max_sq = 0.25 * reach * reach;

    let solves: Vec<_> = betas
        .par_iter()
        .map(|&beta| -> Result<_> {
            let with = solve_domain_refined(domain, b, beta, resolution, options)?;
            let without = solve_domain_refined(domain, 0.0, beta, resolution, options)?;
            Ok((with, without))
        })
        .collect::<Result<_>>()?;

    let computed: Vec<f64> = solves.iter().map(|(w, _)| w.extrapolated).collect();
    let error_estimates: Vec<f64> = solves.iter().map(|(w, o)| w.error_estimate + o.error_estimate).collect();
    // Both bounds hold for the discrete forms on a common mesh, so they are
    // tested there up to round-off.
    let fine_with_field: Vec<f64> = solves.iter().map(|(w, _)| w.fine).collect();
    let lower: Vec<f64> = solves.iter().map(|(_, o)| o.fine).collect();
    let upper: Vec<f64> = lower.iter().map(|l| l + b * b * a_max_sq).collect();
    let sandwich_holds = (0..betas.len()).all(|k| {
        let slack = 1e-9 * lower[k].abs().max(1.0);
        fine_with_field[k] >= lower[k] - slack && fine_with_field[k] <= upper[k] + slack
    });
    let predicted: Vec<f64> = betas.iter().map(|&beta| -beta * beta + beta * kappa).collect();
    let residual_scaled = betas
        .iter()
        .zip(computed.iter().zip(&predicted))
        .map(|(&beta, (&l, &p))| (l - p) / beta.abs().powf(2.0 / 3.0))
        .collect();
    Ok(DomainExpansionCheck {
        expansion: ExpansionCheck { beta_sequence: betas.to_vec(), predicted, computed, residual_scaled },
        kappa_max: kappa,
        a_max_sq,
        fine_with_field,
        lower,
        upper,
        error_estimates,
        sandwich_holds,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub beta: f64,
    pub domain_lambda: f64,
    pub disk_lambda: f64,
    pub below: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdScan {
    pub rows: Vec<ThresholdRow>,
    /// Least negative scanned `β` from which on every scanned point has
    /// `λ₁(Ω) < λ₁(ℬ)`. Empirical only.
    pub beta_threshold: Option<f64>,
}

/// Scan `betas` (decreasing) for the onset of `λ₁(Ω) < λ₁(ℬ)` with the disk
/// of equal perimeter.
pub fn threshold_scan(
    domain: &DomainSpec,
    b: f64,
    betas: &[f64],
    resolution: MeshResolution,
    options: &EigenOptions,
    radial: &RadialConfig,
) -> Result<ThresholdScan> {
    check_sequence(betas)?;
    let radius = domain.matched_radius();
    let rows: Vec<ThresholdRow> = betas
        .par_iter()
        .map(|&beta| -> Result<_> {
            let domain_lambda = solve_domain_refined(domain, b, beta, resolution, options)?.extrapolated;
            let disk_lambda = disk_ground(radius, b, beta, radial)?.lambda1;
            Ok(ThresholdRow { beta, domain_lambda, disk_lambda, below: domain_lambda < disk_lambda })
        })
        .collect::<Result<_>>()?;
    let tail = rows.iter().rev().take_while(|r| r.below).count();
    let beta_threshold = (tail > 0).then(|| rows[rows.len() - tail].beta);
    Ok(ThresholdScan { rows, beta_threshold })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DilationCheck {
    /// `λ₁^{β,b}(ℬ_R)`.
    pub direct: f64,
    /// `R⁻² λ₁^{βR, bR²}(ℬ₁)`.
    pub rescaled: f64,
    pub relative_difference: f64,
}

pub fn dilation_check(radius: f64, b: f64, beta: f64, config: &RadialConfig) -> Result<DilationCheck> {
    let direct = disk_ground(radius, b, beta, config)?.lambda1;
    let rescaled = disk_ground(1.0, b * radius * radius, beta * radius, config)?.lambda1 / (radius * radius);
    Ok(DilationCheck {
        direct,
        rescaled,
        relative_difference: (direct - rescaled).abs() / direct.abs().max(f64::MIN_POSITIVE),
    })
}
