use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::MagneticPair;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Stop when `‖Ax − ρx‖ ≤ tol · max(1, |ρ|)` for the mass-scaled matrix `A`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { tol: 1e-8, max_iter: 500 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FemResult {
    pub lambda1: f64,
    /// Nodal values, `Σ mⱼ |uⱼ|² = 1`, stored as `[re, im]` pairs.
    pub eigenvector: Vec<Complex64>,
    pub h: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Final shift, certified below `λ₁` by a successful Cholesky factorization.
    pub shift: f64,
}

/// Lower envelope of the Hermitian matrix `M^{-1/2} K M^{-1/2}`: row `i`
/// stores columns `first[i]..=i`.
#[derive(Clone)]
struct Envelope {
    first: Vec<usize>,
    rows: Vec<Vec<Complex64>>,
}

impl Envelope {
    fn scaled(pair: &MagneticPair) -> Self {
        let n = pair.len();
        let s: Vec<f64> = pair.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
        let mut first: Vec<usize> = (0..n).collect();
        for &(j, k, _) in &pair.edges {
            first[k] = first[k].min(j);
        }
        let mut rows: Vec<Vec<Complex64>> =
            (0..n).map(|i| vec![Complex64::new(0.0, 0.0); i - first[i] + 1]).collect();
        for i in 0..n {
            rows[i][i - first[i]] = Complex64::new(pair.diag[i] * s[i] * s[i], 0.0);
        }
        for &(j, k, w) in &pair.edges {
            // row k, column j holds the conjugate of K_jk
            rows[k][j - first[k]] = w.conj() * (s[j] * s[k]);
        }
        Envelope { first, rows }
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let f = self.first[i];
            let row = &self.rows[i];
            for (c, a) in row.iter().enumerate().take(row.len() - 1) {
                let j = f + c;
                y[i] += a * x[j];
                y[j] += a.conj() * x[i];
            }
            y[i] += row[row.len() - 1] * x[i];
        }
        y
    }

    fn gershgorin_lower(&self) -> f64 {
        let n = self.rows.len();
        let mut off = vec![0.0; n];
        for i in 0..n {
            let f = self.first[i];
            let row = &self.rows[i];
            for (c, a) in row.iter().enumerate().take(row.len() - 1) {
                off[i] += a.norm();
                off[f + c] += a.norm();
            }
        }
        (0..n)
            .map(|i| self.rows[i][self.rows[i].len() - 1].re - off[i])
            .fold(f64::INFINITY, f64::min)
    }

    /// Cholesky factor of `A − σI`, or `None` when it is not positive definite.
    fn cholesky(&self, sigma: f64) -> Option<Envelope> {
        let n = self.rows.len();
        let mut l: Vec<Vec<Complex64>> = Vec::with_capacity(n);
        for i in 0..n {
            let fi = self.first[i];
            let mut row = self.rows[i].clone();
            let last = row.len() - 1;
            row[last] -= sigma;
            for j in fi..i {
                let fj = self.first[j];
                let start = fi.max(fj);
                let lj = &l[j];
                let mut s = row[j - fi];
                for k in start..j {
                    s -= row[k - fi] * lj[k - fj].conj();
                }
                row[j - fi] = s / lj[j - fj].re;
            }
            let d = row[last].re - row[..last].iter().map(|v| v.norm_sqr()).sum::<f64>();
            if !(d > 0.0 && d.is_finite()) {
                return None;
            }
            row[last] = Complex64::new(d.sqrt(), 0.0);
            l.push(row);
        }
        Some(Envelope { first: self.first.clone(), rows: l })
    }

    /// Solve `L Lᴴ x = b` with `self` holding `L`.
    fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = b.len();
        let mut y = b.to_vec();
        for i in 0..n {
            let f = self.first[i];
            let row = &self.rows[i];
            let last = row.len() - 1;
            let mut s = y[i];
            for (c, a) in row[..last].iter().enumerate() {
                s -= a * y[f + c];
            }
            y[i] = s / row[last].re;
        }
        for i in (0..n).rev() {
            let f = self.first[i];
            let row = &self.rows[i];
            let last = row.len() - 1;
            y[i] /= row[last].re;
            let xi = y[i];
            for (c, a) in row[..last].iter().enumerate() {
                y[f + c] -= a.conj() * xi;
            }
        }
        y
    }
}

fn normalize(x: &mut [Complex64]) {
    let n = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    for v in x.iter_mut() {
        *v /= n;
    }
}

/// Smallest eigenvalue of `K u = λ M u` by shift-and-invert iteration.
///
/// Every shift is accepted only when `A − σI` admits a Cholesky factorization,
/// which certifies `σ < λ₁`. Shifts move up towards the Rayleigh quotient as it
/// settles. A converged pair is kept only when `A − (ρ − δ)I` also factors,
/// with `δ` just above the residual, so no eigenvalue lies below it; otherwise
/// the iteration restarts from another vector.
pub fn lowest_eig(pair: &MagneticPair, h: f64, options: &EigenOptions) -> Result<FemResult> {
    let n = pair.len();
    if n == 0 {
        return Err(Error::InvalidParams("empty matrix pair".into()));
    }
    let a = Envelope::scaled(pair);
    let g = a.gershgorin_lower();
    let floor = g - 1e-9 * g.abs().max(1.0);
    let floor_factor = a
        .cholesky(floor)
        .ok_or_else(|| Error::numeric("factorization failed below the Gershgorin bound", f64::NAN))?;
    let sq: Vec<f64> = pair.mass.iter().map(|m| m.sqrt()).collect();

    let mut trace = Vec::new();
    for attempt in 0..ATTEMPTS {
        let (x, rho, residual, sigma, iterations) =
            match iterate(&a, floor, floor_factor.clone(), start_vector(&sq, attempt), options, &mut trace) {
                Some(r) => r,
                None => break,
            };
        // Any eigenvalue below `rho − slack` would make this factorization fail.
        let slack = 2.0 * residual + 1e-12 * rho.abs().max(1.0);
        if a.cholesky(rho - slack).is_none() {
            continue;
        }
        let mut u: Vec<Complex64> = x.iter().zip(&sq).map(|(v, s)| v / s).collect();
        // fix the global phase so the largest entry is real and positive
        let big = u.iter().copied().max_by(|p, q| p.norm_sqr().total_cmp(&q.norm_sqr())).unwrap();
        let phase = big.conj() / big.norm();
        for v in u.iter_mut() {
            *v *= phase;
        }
        let lambda1 = pair.quadratic_form(&u) / pair.mass_norm_sq(&u);
        return Ok(FemResult { lambda1, eigenvector: u, h, residual, iterations, shift: sigma });
    }
    Err(Error::NumericFailure {
        message: format!("shift-invert iteration did not reach the lowest eigenpair in {} steps", options.max_iter),
        residual: trace.last().copied().unwrap_or(f64::NAN),
        trace,
    })
}

const ATTEMPTS: u64 = 3;

/// Pseudo-random complex start, so that no symmetry sector of the domain is
/// missed.
fn start_vector(sq: &[f64], attempt: u64) -> Vec<Complex64> {
    let mut state = 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(attempt + 1);
    let mut next = || {
        // splitmix64
        state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut x: Vec<Complex64> = sq.iter().map(|&s| Complex64::new(s * (1.0 + next()), s * next())).collect();
    normalize(&mut x);
    x
}

/// Shift-invert iteration from `x`; returns the converged vector, Rayleigh
/// quotient, residual, final shift and iteration count.
fn iterate(
    a: &Envelope,
    mut sigma: f64,
    mut factor: Envelope,
    mut x: Vec<Complex64>,
    options: &EigenOptions,
    trace: &mut Vec<f64>,
) -> Option<(Vec<Complex64>, f64, f64, f64, usize)> {
    let mut last_rho = f64::NAN;
    for it in 1..=options.max_iter {
        x = factor.solve(&x);
        normalize(&mut x);
        let ax = a.apply(&x);
        let rho: f64 = x.iter().zip(&ax).map(|(u, v)| (u.conj() * v).re).sum();
        let residual = ax
            .iter()
            .zip(&x)
            .map(|(v, u)| (v - u * rho).norm_sqr())
            .sum::<f64>()
            .sqrt();
        trace.push(residual);

        if residual <= options.tol * rho.abs().max(1.0) {
            return Some((x, rho, residual, sigma, it));
        }

        // Move the shift up once the Rayleigh quotient has settled.
        let settled = (rho - last_rho).abs() <= 0.1 * (rho - sigma);
        last_rho = rho;
        if settled {
            let mut gap = (rho - sigma).min(2.0 * residual).max(1e-10 * rho.abs().max(1.0));
            for _ in 0..8 {
                let candidate = rho - gap;
                if candidate <= sigma {
                    break;
                }
                if let Some(f) = a.cholesky(candidate) {
                    sigma = candidate;
                    factor = f;
                    break;
                }
                gap *= 4.0;
            }
        }
    }
    None
}
