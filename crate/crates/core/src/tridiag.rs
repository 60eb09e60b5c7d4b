//! Symmetric tridiagonal eigen-utilities: Sturm counts, bisection, and
//! shifted LDLᵀ solves for inverse iteration.

/// Number of eigenvalues of the symmetric tridiagonal matrix `(diag, off)`
/// strictly below `x`, from the signs of the LDLᵀ pivots of `T - xI`.
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let n = diag.len();
    if n == 0 {
        return 0;
    }
    let scale = diag
        .iter()
        .map(|d| d.abs())
        .chain(off.iter().map(|e| e.abs()))
        .fold(0.0_f64, f64::max)
        .max(x.abs())
        .max(f64::MIN_POSITIVE);
    let guard = scale * f64::EPSILON * f64::EPSILON;

    let mut count = 0;
    let mut q = diag[0] - x;
    for i in 0..n {
        if i > 0 {
            q = diag[i] - x - off[i - 1] * off[i - 1] / q;
        }
        if q.abs() < guard {
            q = -guard;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Gershgorin interval containing the whole spectrum.
pub fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - left - right);
        hi = hi.max(diag[i] + left + right);
    }
    (lo, hi)
}

/// Bracket `[lo, hi]` around the `k`-th smallest eigenvalue (0-based), with
/// `sturm_count(lo) <= k < sturm_count(hi)`. Bisection stops when the bracket
/// is below `rel_tol` relative to its magnitude or at floating resolution.
pub fn bisect_eigenvalue(diag: &[f64], off: &[f64], k: usize, rel_tol: f64) -> (f64, f64) {
    let (g_lo, g_hi) = gershgorin(diag, off);
    let pad = 1e-12 * (g_hi - g_lo).abs().max(1.0);
    let mut lo = g_lo - pad;
    let mut hi = g_hi + pad;
    for _ in 0..256 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if hi - lo <= rel_tol * mid.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        if sturm_count(diag, off, mid) <= k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Solve `(T - shift·I) y = rhs` by LDLᵀ without pivoting. Intended for
/// shifts strictly below the spectrum, where the shifted matrix is SPD.
/// Returns `None` when a pivot is not positive.
pub fn shifted_ldl_solve(diag: &[f64], off: &[f64], shift: f64, rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut d = vec![0.0; n];
    let mut l = vec![0.0; n.saturating_sub(1)];
    d[0] = diag[0] - shift;
    if d[0] <= 0.0 {
        return None;
    }
    for i in 1..n {
        l[i - 1] = off[i - 1] / d[i - 1];
        d[i] = diag[i] - shift - l[i - 1] * off[i - 1];
        if d[i] <= 0.0 {
            return None;
        }
    }
    let mut y = rhs.to_vec();
    for i in 1..n {
        y[i] -= l[i - 1] * y[i - 1];
    }
    for i in 0..n {
        y[i] /= d[i];
    }
    for i in (0..n.saturating_sub(1)).rev() {
        y[i] -= l[i] * y[i + 1];
    }
    Some(y)
}

/// `y = T x`.
pub fn matvec(diag: &[f64], off: &[f64], x: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = diag[i] * x[i];
        if i > 0 {
            s += off[i - 1] * x[i - 1];
        }
        if i + 1 < n {
            s += off[i] * x[i + 1];
        }
        y[i] = s;
    }
    y
}
