//! Upper bounds for the domain ground energy from the disk's radial profile
//! transplanted along the distance to the boundary.
//!
//! For `u(x) = ψ(ρ(x))` with `ρ` the distance to `∂Ω`, the co-area formula turns
//! the Rayleigh quotient into one-dimensional integrals over the levels `t`
//! weighted by the level length `|∂Ω_t|` and the moment `∫_{∂Ω_t}|x + x₀|²`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{solve_domain_refined, EigenOptions, MeshResolution, RefinedEigenvalue};
use crate::geometry::{
    norm, sub, subordinacy_check, DomainKind, DomainMetadata, DomainSpec, LevelCurveTable, SubordinacyOptions,
    SubordinacyReport, SubordinacyVerdict,
};
use crate::numerics::{simpson_uniform, trapezoid};
use crate::radial::{certify, disk_ground, AdmissibilityCertificate, RadialConfig, RadialProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    Trapezoid,
    /// Composite Simpson when the levels are uniform with an even number of
    /// panels, trapezoid otherwise.
    #[default]
    Simpson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransplantReport {
    /// `∫ψ'² |∂Ω_t| dt + (b²/4) ∫ψ² moment(t) dt`.
    pub kinetic: f64,
    /// `∫ψ² |∂Ω_t| dt`.
    pub norm_sq: f64,
    /// `L ψ(0)²`.
    pub trace_sq: f64,
    pub rayleigh: f64,
    /// Disk eigenvalue `λ₁(ℬ)` from the fiber solver.
    pub disk_reference: f64,
    pub disk_kinetic: f64,
    pub disk_norm_sq: f64,
    pub disk_trace_sq: f64,
    /// `disk_kinetic − kinetic`.
    pub kinetic_margin: f64,
    /// `disk_norm_sq − norm_sq`.
    pub norm_margin: f64,
    /// `disk_reference − rayleigh`.
    pub rayleigh_margin: f64,
    pub quadrature: Quadrature,
    /// `|rayleigh − rayleigh on every other level|`, an estimate of the
    /// quadrature and level-sampling error.
    pub quadrature_error: f64,
    /// Number of levels, the end points `0` and `r_i` included.
    pub levels_used: usize,
    /// Invalid levels replaced by interpolation between valid neighbours.
    pub interpolated_levels: usize,
}

/// Level data with the end points `t = 0` and `t = r_i` attached and
/// invalid rows replaced by linear interpolation.
fn completed_levels(levels: &LevelCurveTable) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, usize)> {
    let rows = &levels.rows;
    let valid: Vec<usize> = (0..rows.len()).filter(|&k| rows[k].valid).collect();
    if valid.len() < 2 {
        return Err(Error::InvalidParams("fewer than two valid levels".into()));
    }
    let mut t = vec![0.0];
    let mut len = vec![levels.boundary_length];
    let mut mom = vec![levels.boundary_moment];
    let mut interpolated = 0;
    for (k, row) in rows.iter().enumerate() {
        if row.t >= levels.inradius {
            continue;
        }
        t.push(row.t);
        if row.valid {
            len.push(row.length);
            mom.push(row.moment);
            continue;
        }
        interpolated += 1;
        let before = valid.iter().rev().find(|&&j| j < k).copied();
        let after = valid.iter().find(|&&j| j > k).copied();
        let (l, m) = match (before, after) {
            (Some(a), Some(b)) => {
                let w = (row.t - rows[a].t) / (rows[b].t - rows[a].t);
                (
                    rows[a].length + w * (rows[b].length - rows[a].length),
                    rows[a].moment + w * (rows[b].moment - rows[a].moment),
                )
            }
            // Below the first valid level, interpolate towards the boundary.
            (None, Some(b)) => {
                let w = row.t / rows[b].t;
                (
                    levels.boundary_length + w * (rows[b].length - levels.boundary_length),
                    levels.boundary_moment + w * (rows[b].moment - levels.boundary_moment),
                )
            }
            (Some(a), None) => {
                let (p, q) = (valid[valid.len() - 2], a);
                extrapolate(rows[p].t, rows[q].t, row.t, (rows[p].length, rows[q].length), (rows[p].moment, rows[q].moment))
            }
            (None, None) => unreachable!("at least two valid levels"),
        };
        len.push(l);
        mom.push(m);
    }
    let (p, q) = (valid[valid.len() - 2], valid[valid.len() - 1]);
    let (l, m) = extrapolate(
        rows[p].t,
        rows[q].t,
        levels.inradius,
        (rows[p].length, rows[q].length),
        (rows[p].moment, rows[q].moment),
    );
    t.push(levels.inradius);
    len.push(l);
    mom.push(m);
    Ok((t, len, mom, interpolated))
}

fn extrapolate(ta: f64, tb: f64, t: f64, len: (f64, f64), mom: (f64, f64)) -> (f64, f64) {
    let w = (t - ta) / (tb - ta);
    (
        (len.0 + w * (len.1 - len.0)).max(0.0),
        (mom.0 + w * (mom.1 - mom.0)).max(0.0),
    )
}

fn integrate(rule: Quadrature, t: &[f64], ys: &[f64]) -> f64 {
    let n = t.len();
    let step = (t[n - 1] - t[0]) / (n - 1) as f64;
    let uniform = t
        .windows(2)
        .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step);
    if rule == Quadrature::Simpson && uniform && n % 2 == 1 {
        simpson_uniform(step, ys)
    } else {
        trapezoid(t, ys)
    }
}

/// Rayleigh quotient of the transplanted disk profile on the domain whose
/// level data is `levels`.
pub fn transplant_bound(
    levels: &LevelCurveTable,
    profile: &RadialProfile,
    disk_lambda: f64,
    beta: f64,
    b: f64,
    quadrature: Quadrature,
) -> Result<TransplantReport> {
    let (t, len, mom, interpolated) = completed_levels(levels)?;
    let psi: Vec<f64> = t.iter().map(|&s| profile.psi_at(s)).collect();
    let dpsi: Vec<f64> = t.iter().map(|&s| profile.psi_prime_at(s)).collect();
    let trace_sq = levels.boundary_length * psi[0] * psi[0];

    let integrals = |stride: usize| {
        let pick = |v: &[f64]| v.iter().step_by(stride).copied().collect::<Vec<f64>>();
        let ts = pick(&t);
        let f = |k: usize| k * stride;
        let count = ts.len();
        let grad: Vec<f64> = (0..count).map(|k| dpsi[f(k)] * dpsi[f(k)] * len[f(k)]).collect();
        let magnetic: Vec<f64> = (0..count).map(|k| psi[f(k)] * psi[f(k)] * mom[f(k)]).collect();
        let mass: Vec<f64> = (0..count).map(|k| psi[f(k)] * psi[f(k)] * len[f(k)]).collect();
        let kinetic = integrate(quadrature, &ts, &grad) + 0.25 * b * b * integrate(quadrature, &ts, &magnetic);
        (kinetic, integrate(quadrature, &ts, &mass))
    };
    let (kinetic, norm_sq) = integrals(1);
    if !(norm_sq > 0.0) {
        return Err(Error::numeric("transplanted profile has zero norm", norm_sq));
    }
    let rayleigh = (kinetic + beta * trace_sq) / norm_sq;
    // The coarse rule needs the last level on its sub-grid.
    let quadrature_error = if (t.len() - 1) % 2 == 0 && t.len() >= 5 {
        let (k2, n2) = integrals(2);
        ((k2 + beta * trace_sq) / n2 - rayleigh).abs()
    } else {
        f64::NAN
    };

    // Disk integrals on the profile's own grid.
    let radius = profile.radius;
    let step = profile.step();
    let circ = |s: f64| 2.0 * PI * (radius - s);
    let dk: Vec<f64> = profile
        .s
        .iter()
        .zip(profile.psi.iter().zip(&profile.psi_prime))
        .map(|(&s, (&p, &dp))| dp * dp * circ(s) + 0.25 * b * b * p * p * circ(s) * (radius - s).powi(2))
        .collect();
    let dn: Vec<f64> = profile.s.iter().zip(&profile.psi).map(|(&s, &p)| p * p * circ(s)).collect();
    let disk_kinetic = simpson_uniform(step, &dk);
    let disk_norm_sq = simpson_uniform(step, &dn);
    let disk_trace_sq = 2.0 * PI * radius * profile.psi[0] * profile.psi[0];

    Ok(TransplantReport {
        kinetic,
        norm_sq,
        trace_sq,
        rayleigh,
        disk_reference: disk_lambda,
        disk_kinetic,
        disk_norm_sq,
        disk_trace_sq,
        kinetic_margin: disk_kinetic - kinetic,
        norm_margin: disk_norm_sq - norm_sq,
        rayleigh_margin: disk_lambda - rayleigh,
        quadrature,
        quadrature_error,
        levels_used: t.len(),
        interpolated_levels: interpolated,
    })
}

/// Sufficient parameter regime for admissibility on the disk of radius `R`:
/// `β < 0` and `0 < b < min(R⁻², 4√(−β) R^{−3/2})`.
pub fn corollary_regime(radius: f64, b: f64, beta: f64) -> bool {
    beta < 0.0 && b > 0.0 && b < (radius.powi(-2)).min(4.0 * (-beta).sqrt() * radius.powf(-1.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Equality,
    HypothesesNotMet,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub radial: RadialConfig,
    pub subordinacy: SubordinacyOptions,
    pub quadrature: Quadrature,
    /// Coarse resolution of the two-level FEM solve; `None` skips it.
    pub fem: Option<MeshResolution>,
    pub eigen: EigenOptions,
    /// Relative tolerance on `|rayleigh − λ₁(ℬ)|` for disk inputs.
    pub equality_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            radial: RadialConfig::default(),
            subordinacy: SubordinacyOptions::default(),
            quadrature: Quadrature::Simpson,
            fem: Some(MeshResolution::default()),
            eigen: EigenOptions::default(),
            equality_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Hypotheses {
    pub subordinate: bool,
    pub subordinacy_verdict: SubordinacyVerdict,
    pub admissible: bool,
    pub corollary_regime: bool,
    pub disk_lambda_negative: bool,
    pub radial: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub name: Option<String>,
    pub domain: DomainMetadata,
    #[serde(rename = "R")]
    pub radius: f64,
    pub b: f64,
    pub beta: f64,
    pub verdict: Verdict,
    /// Set when a hypothesis fails and the numbers are reported as data only.
    pub exploratory: bool,
    pub is_disk: bool,
    /// `(max − min) |x − c| / R` over the boundary.
    pub roundness: f64,
    pub hypotheses: Hypotheses,
    pub disk_lambda1: f64,
    pub admissibility: AdmissibilityCertificate,
    pub subordinacy: SubordinacyReport,
    pub transplant: Option<TransplantReport>,
    pub fem: Option<RefinedEigenvalue>,
    pub fem_skipped: Option<String>,
    /// Quadrature plus FEM error estimate used in the upper-bound test.
    pub combined_tolerance: f64,
    /// `rayleigh + combined_tolerance − λ₁(Ω)`.
    pub upper_bound_margin: Option<f64>,
    /// `λ₁(ℬ) − λ₁(Ω)`.
    pub chain_margin: Option<f64>,
    pub notes: Vec<String>,
}

/// Run the whole comparison of `λ₁(Ω)` with the disk of equal perimeter.
pub fn verify_isoperimetric(domain: &DomainSpec, beta: f64, b: f64, config: &VerifyConfig) -> Result<VerificationReport> {
    if !(b >= 0.0 && b.is_finite() && beta <= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParams(format!("need b >= 0 and beta <= 0, got b = {b}, beta = {beta}")));
    }
    if !(config.equality_tol > 0.0) {
        return Err(Error::InvalidParams("equality tolerance must be positive".into()));
    }
    let radius = domain.matched_radius();
    let subordinacy = subordinacy_check(domain, radius, &config.subordinacy)?;
    let state = disk_ground(radius, b, beta, &config.radial)?;
    let admissibility = certify(&state);
    let hypotheses = Hypotheses {
        subordinate: subordinacy.verdict == SubordinacyVerdict::Subordinate,
        subordinacy_verdict: subordinacy.verdict,
        admissible: admissibility.admissible,
        corollary_regime: corollary_regime(radius, b, beta),
        disk_lambda_negative: admissibility.lambda_negative,
        radial: admissibility.radial,
    };
    let mut notes = Vec::new();
    if hypotheses.corollary_regime && !hypotheses.admissible {
        notes.push("parameters lie in the sufficient regime but the computed disk state is not admissible".into());
    }

    let c = domain.boundary_centroid();
    let far = domain.vertices().iter().map(|p| norm(sub(*p, c))).fold(0.0, f64::max);
    let near = domain
        .boundary
        .segments()
        .map(|(p, q)| {
            let (d, a) = (sub(q, p), sub(c, p));
            let s = ((a[0] * d[0] + a[1] * d[1]) / (d[0] * d[0] + d[1] * d[1])).clamp(0.0, 1.0);
            norm([a[0] - s * d[0], a[1] - s * d[1]])
        })
        .fold(f64::INFINITY, f64::min);
    let roundness = (far - near) / radius;
    let is_disk = roundness < config.subordinacy.geometry_tol;

    let transplant = match &state.profile {
        Some(profile) => Some(transplant_bound(&subordinacy.table, profile, state.lambda1, beta, b, config.quadrature)?),
        None => {
            notes.push(format!("disk ground state is not radial (m_star = {}); no transplant", state.m_star));
            None
        }
    };

    let (fem, fem_skipped) = match config.fem {
        None => (None, Some("disabled".to_string())),
        Some(_) if domain.kind != DomainKind::Star => (None, Some("polar meshing needs a star domain".to_string())),
        Some(res) => (Some(solve_domain_refined(domain, b, beta, res, &config.eigen)?), None),
    };

    let quad_err = transplant.as_ref().map_or(0.0, |t| {
        if t.quadrature_error.is_finite() {
            t.quadrature_error
        } else {
            0.0
        }
    });
    let fem_err = fem.map_or(0.0, |f| f.error_estimate);
    let combined_tolerance = quad_err + fem_err;
    let upper_bound_margin = match (&transplant, fem) {
        (Some(t), Some(f)) => Some(t.rayleigh + combined_tolerance - f.extrapolated),
        _ => None,
    };
    let chain_margin = fem.map(|f| state.lambda1 - f.extrapolated);

    let hypotheses_met = hypotheses.subordinate && hypotheses.admissible;
    let verdict = match &transplant {
        _ if !hypotheses_met => Verdict::HypothesesNotMet,
        None => Verdict::Inconclusive,
        Some(t) if is_disk => {
            let scale = state.lambda1.abs().max(f64::MIN_POSITIVE);
            if (t.rayleigh - state.lambda1).abs() <= config.equality_tol * scale {
                Verdict::Equality
            } else {
                Verdict::Inconclusive
            }
        }
        Some(t) => {
            let bound_ok = upper_bound_margin.map_or(true, |m| m >= 0.0);
            let chain_ok = chain_margin.map_or(true, |m| m > fem_err);
            if t.rayleigh_margin > quad_err && bound_ok && chain_ok {
                Verdict::Pass
            } else if t.rayleigh_margin < -quad_err || chain_margin.is_some_and(|m| m < -fem_err) {
                Verdict::Fail
            } else {
                Verdict::Inconclusive
            }
        }
    };
    if !hypotheses_met {
        notes.push("hypotheses not met; the comparison is exploratory".into());
    }

    Ok(VerificationReport {
        name: domain.name.clone(),
        domain: domain.metadata(),
        radius,
        b,
        beta,
        verdict,
        exploratory: !hypotheses_met,
        is_disk,
        roundness,
        hypotheses,
        disk_lambda1: state.lambda1,
        admissibility,
        subordinacy,
        transplant,
        fem,
        fem_skipped,
        combined_tolerance,
        upper_bound_margin,
        chain_margin,
        notes,
    })
}
