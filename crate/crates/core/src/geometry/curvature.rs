use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{DomainKind, DomainSpec};
use crate::error::{Error, Result};

/// Oversampling factor of the trigonometric interpolant when searching for
/// the maximum.
const OVERSAMPLE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub kappa_max: f64,
    /// Polar angle where the maximum is attained.
    pub theta: f64,
    /// `2π / L`.
    pub perimeter_bound: f64,
    /// `√(π / A)`.
    pub area_bound: f64,
}

/// Maximum boundary curvature of a star domain from spectral derivatives of
/// its radius samples, low-passed at a quarter of the Nyquist mode.
pub fn curvature_max(domain: &DomainSpec) -> Result<CurvatureReport> {
    if domain.kind != DomainKind::Star {
        return Err(Error::UnsupportedKind(
            "curvature needs a star domain with radius samples".into(),
        ));
    }
    let rho = domain.radius_samples.as_ref().expect("star domains keep samples");
    let n = rho.len();
    let mut planner = FftPlanner::<f64>::new();
    let mut spec: Vec<Complex64> = rho.iter().map(|&r| Complex64::new(r, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut spec);

    let cutoff = (n / 8) as i64;
    let m = OVERSAMPLE * n;
    let mut f0 = vec![Complex64::new(0.0, 0.0); m];
    let mut f1 = f0.clone();
    let mut f2 = f0.clone();
    for (idx, c) in spec.iter().enumerate() {
        let k = if idx <= n / 2 { idx as i64 } else { idx as i64 - n as i64 };
        if k.abs() > cutoff {
            continue;
        }
        let slot = k.rem_euclid(m as i64) as usize;
        let c = c / n as f64;
        let kf = k as f64;
        f0[slot] = c;
        f1[slot] = c * Complex64::new(0.0, kf);
        f2[slot] = c * (-kf * kf);
    }
    let inverse = planner.plan_fft_inverse(m);
    for f in [&mut f0, &mut f1, &mut f2] {
        inverse.process(f);
    }

    let (mut best, mut at) = (f64::NEG_INFINITY, 0);
    for j in 0..m {
        let (r, r1, r2) = (f0[j].re, f1[j].re, f2[j].re);
        let kappa = (r * r + 2.0 * r1 * r1 - r * r2) / (r * r + r1 * r1).powf(1.5);
        if kappa > best {
            best = kappa;
            at = j;
        }
    }
    Ok(CurvatureReport {
        kappa_max: best,
        theta: 2.0 * PI * at as f64 / m as f64,
        perimeter_bound: 2.0 * PI / domain.perimeter(),
        area_bound: (PI / domain.area()).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_curvature() {
        let d = DomainSpec::disk(2.0, 256).unwrap();
        let c = curvature_max(&d).unwrap();
        assert!((c.kappa_max - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ellipse_vertex_curvature() {
        let d = DomainSpec::ellipse(1.2, 0.8, 1024).unwrap();
        let c = curvature_max(&d).unwrap();
        assert!((c.kappa_max - 1.875).abs() < 1e-8, "{}", c.kappa_max);
        assert!(c.kappa_max > c.area_bound && c.area_bound >= c.perimeter_bound);
    }

    #[test]
    fn polygons_are_rejected() {
        let d = DomainSpec::polygon(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(curvature_max(&d), Err(Error::UnsupportedKind(_))));
    }
}
