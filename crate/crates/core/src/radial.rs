//! Angular fiber operators of the magnetic Robin Laplacian on a disk.
//!
//! On the disk of radius `R` the operator decomposes over angular modes
//! `m ∈ ℤ`. Each fiber acts in `L²((0,R); r dr)` with quadratic form
//!
//! ```text
//! q_m[f] = ∫₀ᴿ (|f'|² + r⁻²(m − b r²/2)² |f|²) r dr + β R |f(R)|²
//! ```
//!
//! The form is discretized by a flux-conservative finite-volume scheme on a
//! uniform grid (second order), which yields a symmetric tridiagonal
//! stiffness matrix and a diagonal mass matrix. The lowest eigenpair is
//! located by Sturm bisection and polished by inverse iteration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{cubic_interp, linspace, uniform_derivative};
use crate::tridiag;

/// Smallest admissible number of radial nodes.
pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberParams {
    pub m: i64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub b: f64,
    pub beta: f64,
}

impl FiberParams {
    pub fn new(m: i64, radius: f64, b: f64, beta: f64) -> Result<Self> {
        let p = FiberParams { m, radius, b, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_disk_params(self.radius, self.b, self.beta)
    }

    /// `r⁻² (m − b r²/2)²`.
    pub fn potential(&self, r: f64) -> f64 {
        let a = self.m as f64 - 0.5 * self.b * r * r;
        a * a / (r * r)
    }

    /// `∫ₐᵇ r⁻² (m − b r²/2)² r dr` in closed form.
    pub fn potential_integral(&self, a: f64, b: f64) -> f64 {
        let m = self.m as f64;
        let log = if m == 0.0 { 0.0 } else { m * m * (b / a).ln() };
        log - 0.5 * m * self.b * (b * b - a * a) + self.b * self.b * (b.powi(4) - a.powi(4)) / 16.0
    }
}

pub fn check_disk_params(radius: f64, b: f64, beta: f64) -> Result<()> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidParams(format!("radius must be > 0, got {radius}")));
    }
    if !(b.is_finite() && b >= 0.0) {
        return Err(Error::InvalidParams(format!("field b must be >= 0, got {b}")));
    }
    if !(beta.is_finite() && beta <= 0.0) {
        return Err(Error::InvalidParams(format!("Robin parameter must be <= 0, got {beta}")));
    }
    Ok(())
}

/// Treatment of the left end of the radial interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OriginCondition {
    /// Zero flux through `r = 0` (natural condition for `m = 0`).
    Reflecting,
    /// `f(0) = 0` through a ghost value at the excluded origin node.
    Dirichlet,
}

/// Nodes in `(0, R]` with control-volume weights for the measure `r dr`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub n: usize,
    pub r: Vec<f64>,
    pub weights: Vec<f64>,
    pub origin: OriginCondition,
}

impl RadialGrid {
    pub fn new(r: Vec<f64>, weights: Vec<f64>, origin: OriginCondition) -> Result<Self> {
        let n = r.len();
        if n < MIN_NODES {
            return Err(Error::InvalidGrid(format!("need at least {MIN_NODES} nodes, got {n}")));
        }
        if weights.len() != n {
            return Err(Error::InvalidGrid("weights and nodes differ in length".into()));
        }
        if !(r[0] > 0.0) {
            return Err(Error::InvalidGrid("first node must be > 0".into()));
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("nodes must be strictly increasing".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidGrid("weights must be positive".into()));
        }
        Ok(RadialGrid { n, r, weights, origin })
    }

    /// Cell-centred grid `r_i = (i + ½) h`, `h = R / (n − ½)`, so the last
    /// node sits on the boundary and the first cell is `[0, h]`.
    pub fn staggered(radius: f64, n: usize) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::InvalidGrid(format!("need at least {MIN_NODES} nodes, got {n}")));
        }
        let h = radius / (n as f64 - 0.5);
        let mut r: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
        r[n - 1] = radius;
        let weights = (0..n)
            .map(|i| {
                let left = i as f64 * h;
                let right = if i + 1 == n { radius } else { (i + 1) as f64 * h };
                0.5 * (right * right - left * left)
            })
            .collect();
        Self::new(r, weights, OriginCondition::Reflecting)
    }

    /// Vertex grid `r_i = (i + 1) h`, `h = R / n`, with the origin excluded.
    pub fn vertex(radius: f64, n: usize) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::InvalidGrid(format!("need at least {MIN_NODES} nodes, got {n}")));
        }
        let h = radius / n as f64;
        let mut r: Vec<f64> = (0..n).map(|i| (i + 1) as f64 * h).collect();
        r[n - 1] = radius;
        let weights = (0..n)
            .map(|i| {
                let left = r[i] - 0.5 * h;
                let right = if i + 1 == n { radius } else { r[i] + 0.5 * h };
                0.5 * (right * right - left * left)
            })
            .collect();
        Self::new(r, weights, OriginCondition::Dirichlet)
    }

    /// Grid suited to angular mode `m`.
    pub fn for_mode(m: i64, radius: f64, n: usize) -> Result<Self> {
        if m == 0 {
            Self::staggered(radius, n)
        } else {
            Self::vertex(radius, n)
        }
    }

    pub fn radius(&self) -> f64 {
        self.r[self.n - 1]
    }

    /// Control-volume edges: midpoints between nodes, closed by the origin
    /// (or half the first node for a Dirichlet origin) and by `R`.
    pub fn cell_edges(&self) -> Vec<f64> {
        let mut e = Vec::with_capacity(self.n + 1);
        e.push(match self.origin {
            OriginCondition::Reflecting => 0.0,
            OriginCondition::Dirichlet => 0.5 * self.r[0],
        });
        e.extend(self.r.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        e.push(self.radius());
        e
    }

    pub fn weighted_norm_sq(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v * v).sum()
    }
}

/// Discretized fiber form, kept split by term so the quadratic form can be
/// evaluated from differences without cancellation.
#[derive(Debug, Clone)]
pub struct FiberOperator {
    /// Face coefficients `r_face / Δr` between consecutive nodes.
    pub flux: Vec<f64>,
    /// Coupling of the first node to the ghost origin value (Dirichlet only).
    pub origin_link: f64,
    /// Cell integrals of the potential against `r dr`.
    pub potential: Vec<f64>,
    /// `β R`, attached to the boundary node.
    pub boundary: f64,
    /// Diagonal of the mass matrix (the grid weights).
    pub mass: Vec<f64>,
}

impl FiberOperator {
    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn stiffness_diag(&self) -> Vec<f64> {
        let n = self.len();
        let mut d = self.potential.clone();
        d[0] += self.origin_link;
        for (i, c) in self.flux.iter().enumerate() {
            d[i] += c;
            d[i + 1] += c;
        }
        d[n - 1] += self.boundary;
        d
    }

    pub fn stiffness_off(&self) -> Vec<f64> {
        self.flux.iter().map(|c| -c).collect()
    }

    /// Discrete quadratic form `fᵀ K f`.
    pub fn quadratic_form(&self, f: &[f64]) -> f64 {
        let n = self.len();
        let kinetic: f64 = self
            .flux
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let d = f[i + 1] - f[i];
                c * d * d
            })
            .sum();
        let pot: f64 = self.potential.iter().zip(f).map(|(p, v)| p * v * v).sum();
        kinetic + self.origin_link * f[0] * f[0] + pot + self.boundary * f[n - 1] * f[n - 1]
    }

    /// Symmetric tridiagonal `M^{-1/2} K M^{-1/2}`.
    fn symmetrized(&self) -> (Vec<f64>, Vec<f64>) {
        let sq: Vec<f64> = self.mass.iter().map(|w| w.sqrt()).collect();
        let diag = self
            .stiffness_diag()
            .iter()
            .zip(&self.mass)
            .map(|(k, w)| k / w)
            .collect();
        let off = self
            .flux
            .iter()
            .enumerate()
            .map(|(i, c)| -c / (sq[i] * sq[i + 1]))
            .collect();
        (diag, off)
    }
}

/// Assemble the fiber stiffness/mass pair for `params` on `grid`.
pub fn assemble_fiber(params: &FiberParams, grid: &RadialGrid) -> Result<FiberOperator> {
    params.validate()?;
    let n = grid.n;
    if n < MIN_NODES {
        return Err(Error::InvalidGrid(format!("need at least {MIN_NODES} nodes, got {n}")));
    }
    if grid.r.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("nodes must be strictly increasing".into()));
    }
    let radius = grid.radius();
    if ((radius - params.radius) / params.radius).abs() > 1e-12 {
        return Err(Error::InvalidGrid(format!(
            "grid ends at {radius}, disk radius is {}",
            params.radius
        )));
    }

    let flux = grid
        .r
        .windows(2)
        .map(|w| 0.5 * (w[0] + w[1]) / (w[1] - w[0]))
        .collect();
    let origin_link = match grid.origin {
        OriginCondition::Reflecting => 0.0,
        OriginCondition::Dirichlet => 0.5,
    };
    let potential = grid
        .cell_edges()
        .windows(2)
        .map(|e| params.potential_integral(e[0], e[1]))
        .collect();

    Ok(FiberOperator {
        flux,
        origin_link,
        potential,
        boundary: params.beta * params.radius,
        mass: grid.weights.clone(),
    })
}

/// Lowest eigenpair of one fiber.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiberResult {
    pub params: FiberParams,
    pub mu1: f64,
    /// Second eigenvalue, kept for the spectral gap check.
    pub mu2: f64,
    /// Eigenfunction samples, `Σ wᵢ fᵢ² = 1`, positive at the boundary node.
    pub f: Vec<f64>,
    pub grid: RadialGrid,
    /// `‖(K − μ₁M) f‖` in the `M⁻¹` norm.
    pub residual: f64,
}

impl FiberResult {
    pub fn gap(&self) -> f64 {
        self.mu2 - self.mu1
    }
}

const INVERSE_ITERATION_BUDGET: usize = 60;

/// Lowest eigenvalue and positive normalized eigenfunction of one fiber.
pub fn fiber_ground(params: &FiberParams, grid: &RadialGrid) -> Result<FiberResult> {
    let op = assemble_fiber(params, grid)?;
    let (diag, off) = op.symmetrized();
    let n = diag.len();

    let (lo1, hi1) = tridiag::bisect_eigenvalue(&diag, &off, 0, 1e-15);
    let (lo2, hi2) = tridiag::bisect_eigenvalue(&diag, &off, 1, 1e-13);
    let mu2 = 0.5 * (lo2 + hi2);
    let (g_lo, g_hi) = tridiag::gershgorin(&diag, &off);
    let scale = g_lo.abs().max(g_hi.abs()).max(1.0);

    // Shift strictly below λ₁ keeps T − σI positive definite.
    let mut gap = (hi1 - lo1).max(4.0 * f64::EPSILON * scale);
    let mut shift = lo1 - gap;
    let mut y = vec![1.0; n];
    let mut trace = Vec::new();
    let mut last_mu = f64::NAN;
    let mut result = None;

    for _ in 0..INVERSE_ITERATION_BUDGET {
        let next = match tridiag::shifted_ldl_solve(&diag, &off, shift, &y) {
            Some(v) => v,
            None => {
                gap *= 4.0;
                shift = lo1 - gap;
                continue;
            }
        };
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NumericFailure {
                message: "inverse iteration broke down".into(),
                residual: f64::NAN,
                trace,
            });
        }
        y = next.iter().map(|v| v / norm).collect();

        // Back to the nodal function f = M^{-1/2} y and its Rayleigh quotient.
        let f: Vec<f64> = y.iter().zip(&op.mass).map(|(v, w)| v / w.sqrt()).collect();
        let mu = op.quadratic_form(&f) / grid.weighted_norm_sq(&f);
        let ty = tridiag::matvec(&diag, &off, &y);
        let residual = ty
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - mu * b).powi(2))
            .sum::<f64>()
            .sqrt();
        trace.push(residual);

        let settled = (mu - last_mu).abs() <= 1e-14 * scale;
        last_mu = mu;
        if residual <= 1e-9 * scale || (settled && residual <= 1e-7 * scale) {
            result = Some((mu, f, residual));
            break;
        }
    }

    let (mu1, mut f, residual) = result.ok_or_else(|| Error::NumericFailure {
        message: format!("fiber m={} inverse iteration did not converge", params.m),
        residual: trace.last().copied().unwrap_or(f64::NAN),
        trace: trace.clone(),
    })?;

    let sign = if f[n - 1] < 0.0 { -1.0 } else { 1.0 };
    let norm = grid.weighted_norm_sq(&f).sqrt();
    for v in f.iter_mut() {
        *v *= sign / norm;
    }
    if let Some(i) = f.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::numeric(
            format!("ground state of fiber m={} changes sign at node {i}", params.m),
            residual,
        ));
    }

    Ok(FiberResult {
        params: *params,
        mu1,
        mu2,
        f,
        grid: grid.clone(),
        residual,
    })
}

/// The radial disk ground state `f⋆(R − s)` as a function of the distance
/// `s` to the boundary circle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialProfile {
    #[serde(rename = "R")]
    pub radius: f64,
    pub s: Vec<f64>,
    pub psi: Vec<f64>,
    pub psi_prime: Vec<f64>,
}

impl RadialProfile {
    pub fn step(&self) -> f64 {
        self.s[1] - self.s[0]
    }

    pub fn psi_at(&self, s: f64) -> f64 {
        cubic_interp(&self.s, &self.psi, s)
    }

    pub fn psi_prime_at(&self, s: f64) -> f64 {
        cubic_interp(&self.s, &self.psi_prime, s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiskGroundState {
    #[serde(rename = "R")]
    pub radius: f64,
    pub b: f64,
    pub beta: f64,
    pub lambda1: f64,
    pub m_star: i64,
    pub profile: Option<RadialProfile>,
    pub scanned_modes: Vec<(i64, f64)>,
    /// The minimizing fiber.
    #[serde(skip)]
    pub ground: FiberResult,
}

/// Discretization controls for disk solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialConfig {
    /// Nodes per fiber.
    pub n: usize,
}

impl Default for RadialConfig {
    fn default() -> Self {
        RadialConfig { n: 2048 }
    }
}

/// Highest `|m|` scanned: `ceil(b R²)`.
pub fn mode_bound(radius: f64, b: f64) -> i64 {
    (b * radius * radius).ceil() as i64
}

/// `λ₁` of the disk as the minimum over all fibers with `|m| ≤ ceil(bR²)`.
pub fn disk_ground(radius: f64, b: f64, beta: f64, config: &RadialConfig) -> Result<DiskGroundState> {
    check_disk_params(radius, b, beta)?;
    let top = mode_bound(radius, b);
    let fibers: Vec<FiberResult> = (-top..=top)
        .into_par_iter()
        .map(|m| {
            let params = FiberParams { m, radius, b, beta };
            let grid = RadialGrid::for_mode(m, radius, config.n)?;
            fiber_ground(&params, &grid)
        })
        .collect::<Result<_>>()?;

    let best = fibers
        .iter()
        .min_by(|a, b| {
            a.mu1
                .total_cmp(&b.mu1)
                .then(a.params.m.abs().cmp(&b.params.m.abs()))
                .then(b.params.m.cmp(&a.params.m))
        })
        .expect("mode 0 is always scanned");

    let mut state = DiskGroundState {
        radius,
        b,
        beta,
        lambda1: best.mu1,
        m_star: best.params.m,
        profile: None,
        scanned_modes: fibers.iter().map(|f| (f.params.m, f.mu1)).collect(),
        ground: best.clone(),
    };
    if state.m_star == 0 {
        state.profile = Some(radial_profile(&state)?);
    }
    Ok(state)
}

/// Resample the radial ground state onto a uniform grid in `s = R − r`.
pub fn radial_profile(state: &DiskGroundState) -> Result<RadialProfile> {
    if state.m_star != 0 {
        return Err(Error::NotRadial { m_star: state.m_star });
    }
    let grid = &state.ground.grid;
    let f = &state.ground.f;
    let radius = state.radius;

    // Even extension across r = 0 (f⋆ is smooth with f⋆'(0) = 0).
    let mut rs = Vec::with_capacity(grid.n + 2);
    let mut fs = Vec::with_capacity(grid.n + 2);
    if grid.origin == OriginCondition::Reflecting {
        rs.extend([-grid.r[1], -grid.r[0]]);
        fs.extend([f[1], f[0]]);
    }
    rs.extend_from_slice(&grid.r);
    fs.extend_from_slice(f);

    let n_s = grid.n.max(MIN_NODES);
    let s = linspace(0.0, radius, n_s);
    let psi: Vec<f64> = s.iter().map(|&sv| cubic_interp(&rs, &fs, radius - sv)).collect();
    let psi_prime = uniform_derivative(s[1] - s[0], &psi);
    Ok(RadialProfile { radius, s, psi, psi_prime })
}

/// Evidence behind an admissibility decision.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityCertificate {
    pub admissible: bool,
    /// `b > 0` and `β < 0`.
    pub in_parameter_domain: bool,
    pub lambda1: f64,
    pub lambda_negative: bool,
    pub m_star: i64,
    pub radial: bool,
    /// `b R² < 1`, which forces a radial ground state.
    pub mode_bound_radial: bool,
    /// `β < −R³b²/16`, which forces `λ₁ < 0` through the constant test function.
    pub constant_test_negative: bool,
    /// `bR² < 1` together with `β < β_c` (equivalently `λ₁ < 0`).
    pub sufficient_condition: bool,
}

/// Whether `(β, b)` belongs to the admissible set: negative disk ground
/// energy carried by a radial ground state.
pub fn is_admissible(
    radius: f64,
    b: f64,
    beta: f64,
    config: &RadialConfig,
) -> Result<AdmissibilityCertificate> {
    check_disk_params(radius, b, beta)?;
    Ok(certify(&disk_ground(radius, b, beta, config)?))
}

/// Admissibility certificate of an already computed disk state.
pub fn certify(state: &DiskGroundState) -> AdmissibilityCertificate {
    let (radius, b, beta) = (state.radius, state.b, state.beta);
    let in_domain = b > 0.0 && beta < 0.0;
    let lambda_negative = state.lambda1 < 0.0;
    let radial = state.m_star == 0;
    let mode_bound_radial = b * radius * radius < 1.0;
    AdmissibilityCertificate {
        admissible: in_domain && lambda_negative && radial,
        in_parameter_domain: in_domain,
        lambda1: state.lambda1,
        lambda_negative,
        m_star: state.m_star,
        radial,
        mode_bound_radial,
        constant_test_negative: beta < -radius.powi(3) * b * b / 16.0,
        sufficient_condition: mode_bound_radial && lambda_negative,
    }
}

/// Upper bound on the disk energy from the constant test function,
/// `(R³b²/8 + 2β)/R`.
pub fn constant_test_bound(radius: f64, b: f64, beta: f64) -> f64 {
    (radius.powi(3) * b * b / 8.0 + 2.0 * beta) / radius
}

/// Critical Robin parameter of the disk: the sign change of `β ↦ λ₁`.
///
/// Bisection stops once the bracket is below `tol · R³b²/16`.
pub fn critical_beta_disk(radius: f64, b: f64, tol: f64, config: &RadialConfig) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::InvalidParams(format!("critical beta needs b > 0, got {b}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParams("tolerance must be positive".into()));
    }
    let scale = radius.powi(3) * b * b / 16.0;
    let lambda = |beta: f64| disk_ground(radius, b, beta, config).map(|s| s.lambda1);

    let mut lo = -1.5 * scale - 1e-300;
    let mut hi = 0.0;
    let at_lo = lambda(lo)?;
    if !(at_lo < 0.0) {
        return Err(Error::numeric(
            format!("no sign change: lambda1({lo:e}) = {at_lo:e} is not negative"),
            at_lo.abs(),
        ));
    }
    let at_hi = lambda(hi)?;
    if !(at_hi > 0.0) {
        return Err(Error::numeric(
            format!("no sign change: Neumann lambda1 = {at_hi:e} is not positive"),
            at_hi.abs(),
        ));
    }
    for _ in 0..200 {
        if hi - lo <= tol * scale {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if lambda(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
