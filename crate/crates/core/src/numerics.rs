//! Small interpolation, differentiation and quadrature helpers on sampled data.

/// Cubic (4-point Lagrange) interpolation on sorted nodes `xs`. The stencil
/// is shifted inwards near the ends, so evaluation slightly outside the node
/// range extrapolates with the boundary cubic.
pub fn cubic_interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    debug_assert_eq!(n, ys.len());
    match n {
        0 => return f64::NAN,
        1 => return ys[0],
        2 | 3 => return linear_interp(xs, ys, x),
        _ => {}
    }
    let j = xs.partition_point(|&v| v <= x);
    let start = j.saturating_sub(2).min(n - 4);
    let xs4 = &xs[start..start + 4];
    let ys4 = &ys[start..start + 4];
    let mut acc = 0.0;
    for i in 0..4 {
        let mut basis = 1.0;
        for k in 0..4 {
            if k != i {
                basis *= (x - xs4[k]) / (xs4[i] - xs4[k]);
            }
        }
        acc += basis * ys4[i];
    }
    acc
}

/// Piecewise-linear interpolation with constant extension beyond the ends.
pub fn linear_interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let j = xs.partition_point(|&v| v <= x);
    let (x0, x1) = (xs[j - 1], xs[j]);
    let w = (x - x0) / (x1 - x0);
    ys[j - 1] * (1.0 - w) + ys[j] * w
}

/// Derivative of uniformly spaced samples: centered differences inside,
/// second-order one-sided stencils at both ends.
pub fn uniform_derivative(step: f64, ys: &[f64]) -> Vec<f64> {
    let n = ys.len();
    let mut d = vec![0.0; n];
    if n < 3 {
        if n == 2 {
            let s = (ys[1] - ys[0]) / step;
            d[0] = s;
            d[1] = s;
        }
        return d;
    }
    d[0] = (-3.0 * ys[0] + 4.0 * ys[1] - ys[2]) / (2.0 * step);
    for i in 1..n - 1 {
        d[i] = (ys[i + 1] - ys[i - 1]) / (2.0 * step);
    }
    d[n - 1] = (3.0 * ys[n - 1] - 4.0 * ys[n - 2] + ys[n - 3]) / (2.0 * step);
    d
}

/// Composite trapezoid rule on arbitrary sorted abscissae.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Composite Simpson rule on uniformly spaced samples. With an even number of
/// samples the last panel falls back to the trapezoid rule.
pub fn simpson_uniform(step: f64, ys: &[f64]) -> f64 {
    let n = ys.len();
    if n < 3 {
        return if n == 2 { 0.5 * step * (ys[0] + ys[1]) } else { 0.0 };
    }
    let m = if n % 2 == 1 { n } else { n - 1 };
    let mut acc = ys[0] + ys[m - 1];
    for (i, y) in ys.iter().enumerate().take(m - 1).skip(1) {
        acc += if i % 2 == 1 { 4.0 * y } else { 2.0 * y };
    }
    let mut total = acc * step / 3.0;
    if m < n {
        total += 0.5 * step * (ys[n - 2] + ys[n - 1]);
    }
    total
}

/// Uniform grid of `n` points on `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let step = (b - a) / (n - 1) as f64;
            (0..n)
                .map(|i| if i + 1 == n { b } else { a + step * i as f64 })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_is_exact_on_cubics() {
        let xs = linspace(0.0, 2.0, 9);
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x;
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        for x in [0.0, 0.13, 0.9, 1.77, 2.0] {
            assert!((cubic_interp(&xs, &ys, x) - f(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_is_exact_on_quadratics() {
        let xs = linspace(0.0, 1.0, 11);
        let ys: Vec<f64> = xs.iter().map(|&x| 3.0 * x * x - x).collect();
        let d = uniform_derivative(0.1, &ys);
        for (x, dy) in xs.iter().zip(d) {
            assert!((dy - (6.0 * x - 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn simpson_integrates_cubics() {
        let xs = linspace(0.0, 1.0, 9);
        let ys: Vec<f64> = xs.iter().map(|&x| x * x * x).collect();
        assert!((simpson_uniform(0.125, &ys) - 0.25).abs() < 1e-14);
        assert!((trapezoid(&xs, &ys) - 0.25).abs() < 5e-3);
    }
}
