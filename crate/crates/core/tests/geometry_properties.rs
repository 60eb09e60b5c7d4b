use std::f64::consts::PI;

use magrobin::geometry::{
    default_levels, distance_field, hurwitz_gap, inradius, level_curves, subordinacy_check,
    DomainSpec, Polyline, SubordinacyOptions, SubordinacyVerdict,
};
use proptest::prelude::*;

/// Adaptive Simpson quadrature.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    step(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 40)
}

fn ellipse_perimeter(a: f64, b: f64) -> f64 {
    adaptive_simpson(&|t: f64| (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt(), 0.0, 2.0 * PI, 1e-12)
}

#[test]
fn ellipse_perimeter_matches_quadrature() {
    let d = DomainSpec::ellipse(1.2, 0.8, 1024).unwrap();
    let exact = ellipse_perimeter(1.2, 0.8);
    assert!((d.perimeter() / exact - 1.0).abs() < 1e-5, "{} vs {exact}", d.perimeter());
}

#[test]
fn inradius_examples() {
    let e = DomainSpec::ellipse(1.2, 0.8, 1024).unwrap();
    assert!((e.inradius() - 0.8).abs() < 2e-3);
    let sq = DomainSpec::polygon(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
    assert!((sq.inradius() - 0.5).abs() < 2e-3);
}

#[test]
fn level_lengths_stay_below_disk_lengths() {
    let domains = [
        DomainSpec::disk(1.0, 1024).unwrap(),
        DomainSpec::ellipse(1.2, 0.8, 1024).unwrap().with_perimeter(2.0 * PI).unwrap(),
        DomainSpec::rounded_square(1.0, 6.0, 1024).unwrap().with_perimeter(2.0 * PI).unwrap(),
    ];
    for d in &domains {
        let l = d.perimeter();
        let f = distance_field(d, d.matched_radius() / 256.0).unwrap();
        let levels = default_levels(inradius(&f), 64);
        let table = level_curves(&f, d, &levels, [0.0, 0.0]).unwrap();
        for r in table.rows.iter().filter(|r| r.valid) {
            assert!(r.length <= l - 2.0 * PI * r.t + 0.01 * l, "t={} length={}", r.t, r.length);
            assert_eq!(r.components, 1);
        }
    }
}

#[test]
fn containment_bounds_level_points() {
    // a quarter-notched disk lies inside the disk of radius 1 about the origin
    let mut v: Vec<[f64; 2]> = (0..=384)
        .map(|k| {
            let t = 0.5 * PI + 1.5 * PI * k as f64 / 384.0;
            [t.cos(), t.sin()]
        })
        .collect();
    v.push([0.0, 0.0]);
    let d = DomainSpec::polygon(v).unwrap();
    let f = distance_field(&d, 1.0 / 256.0).unwrap();
    let levels = default_levels(inradius(&f), 32);
    let table = level_curves(&f, &d, &levels, [0.0, 0.0]).unwrap();
    for r in &table.rows {
        assert!(r.max_radius <= 1.0 - r.t + 2.0 * f.h, "t={} reach={}", r.t, r.max_radius);
    }
    let rep = subordinacy_check(&d, d.matched_radius(), &SubordinacyOptions::default()).unwrap();
    assert!(rep.worst_margin > 0.0);
}

#[test]
fn distance_is_concave_on_convex_domains() {
    let d = DomainSpec::ellipse(1.3, 0.7, 1024).unwrap();
    let f = distance_field(&d, 1.0 / 128.0).unwrap();
    let pts: Vec<[f64; 2]> = (0..40)
        .map(|k| {
            let t = k as f64 * 0.71;
            let s = 0.9 * ((k as f64 * 0.37).sin()).abs();
            [1.3 * s * t.cos(), 0.7 * s * t.sin()]
        })
        .collect();
    for p in &pts {
        for q in &pts {
            let m = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
            assert!(f.sample(m) >= 0.5 * (f.sample(*p) + f.sample(*q)) - 2.0 * f.h);
        }
    }
}

#[test]
fn regular_polygons_nearly_attain_the_hurwitz_bound() {
    let n = 256;
    let poly = Polyline::closed((0..n).map(|k| {
        let t = 2.0 * PI * k as f64 / n as f64;
        [3.0 + t.cos(), -1.0 + t.sin()]
    }).collect());
    let g = hurwitz_gap(&poly).unwrap();
    assert!((g.moment / g.bound - 1.0).abs() < 1e-3);
    assert!(g.margin >= -1e-6 * g.length.powi(3));
}

fn star_polygon() -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec((0.2..2.0f64, 0.0..1.0f64), 3..40).prop_map(|raw| {
        let total: f64 = raw.iter().map(|(_, w)| w + 0.05).sum();
        let mut angle = 0.0;
        raw.iter()
            .map(|(r, w)| {
                angle += 2.0 * PI * (w + 0.05) / total;
                [r * angle.cos() + 5.0, r * angle.sin() - 2.0]
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hurwitz_margin_is_nonnegative(points in star_polygon()) {
        let g = hurwitz_gap(&Polyline::closed(points)).unwrap();
        prop_assert!(g.margin >= -1e-6 * g.length.powi(3));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn zonogons_satisfy_the_level_length_lemma(gens in prop::collection::vec((-1.0..1.0f64, 0.05..1.0f64), 2..7)) {
        let g: Vec<[f64; 2]> = gens.iter().map(|&(x, y)| [x, y]).collect();
        let d = DomainSpec::zonogon(&g).unwrap().with_perimeter(2.0 * PI).unwrap();
        let l = d.perimeter();
        let f = distance_field(&d, d.matched_radius() / 256.0).unwrap();
        let table = level_curves(&f, &d, &default_levels(inradius(&f), 32), [0.0, 0.0]).unwrap();
        for r in table.rows.iter().filter(|r| r.valid) {
            prop_assert!(r.length <= l - 2.0 * PI * r.t + 0.01 * l);
        }
        let rep = subordinacy_check(&d, d.matched_radius(), &SubordinacyOptions::default()).unwrap();
        prop_assert_eq!(rep.verdict, SubordinacyVerdict::Subordinate);
    }
}
