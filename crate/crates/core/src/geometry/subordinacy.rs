use std::f64::consts::PI;

use rstar::primitives::Line;
use rstar::{PointDistance, RTree};
use serde::{Deserialize, Serialize};

use super::{default_levels, distance_field, level_curves, norm, sub, DomainSpec, LevelCurveTable, Point, Polyline};
use crate::error::{Error, Result};

/// How the reference point `x₀` of the moment condition is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "policy", content = "point")]
pub enum X0Policy {
    /// `x₀ = −c` with `c` the boundary centroid, so moments are taken about `c`.
    #[default]
    Centroid,
    Fixed(Point),
    /// Nelder–Mead search for the `x₀` maximizing the worst level margin.
    Optimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubordinacyOptions {
    /// Distance-field spacing; `None` uses `R/256`.
    pub h: Option<f64>,
    pub levels: usize,
    pub x0_policy: X0Policy,
    /// Margin tolerance relative to the disk moment `2π(R−t)³`; an absolute
    /// `2π(R−t)h²` is added for the contour discretization.
    pub rel_tol: f64,
    /// Tolerance for the convexity, symmetry and containment tests.
    pub geometry_tol: f64,
}

impl Default for SubordinacyOptions {
    fn default() -> Self {
        SubordinacyOptions {
            h: None,
            levels: 64,
            x0_policy: X0Policy::Centroid,
            rel_tol: 1e-2,
            geometry_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubordinacyVerdict {
    Subordinate,
    NotSubordinate,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubordinacyReport {
    pub x0: Point,
    pub x0_policy: X0Policy,
    #[serde(rename = "R")]
    pub radius: f64,
    pub t: Vec<f64>,
    /// `2π(R−t)³ − moment(t)` per level.
    pub margins: Vec<f64>,
    pub tolerances: Vec<f64>,
    pub valid: Vec<bool>,
    pub verdict: SubordinacyVerdict,
    /// Sufficient condition or margin test that produced the verdict.
    pub decided_by: String,
    pub worst_t: f64,
    pub worst_margin: f64,
    pub contained_in_disk: bool,
    pub convex: bool,
    pub centrally_symmetric: bool,
    pub convex_centrally_symmetric: bool,
    /// Hausdorff distance to the point reflection through the boundary
    /// centroid, divided by `L`.
    pub symmetry_defect: f64,
    /// `max |x + x₀| / R − 1` over the boundary.
    pub containment_excess: f64,
    /// The moment inequality is required for almost every level; only these
    /// finitely many levels were checked.
    pub levels_checked: usize,
    #[serde(skip)]
    pub table: LevelCurveTable,
}

/// Evaluate the moment condition `∫_{∂Ω_t} |x + x₀|² ≤ 2π(R − t)³` and its
/// two sufficient conditions.
pub fn subordinacy_check(
    domain: &DomainSpec,
    radius: f64,
    options: &SubordinacyOptions,
) -> Result<SubordinacyReport> {
    let matched = domain.matched_radius();
    if !(radius > 0.0) || ((radius - matched) / matched).abs() > 1e-9 {
        return Err(Error::InvalidParams(format!(
            "disk radius {radius} does not match the perimeter radius {matched}"
        )));
    }
    if options.levels < 2 {
        return Err(Error::InvalidParams("need at least 2 levels".into()));
    }
    let h = options.h.unwrap_or(radius / 256.0);
    let field = distance_field(domain, h)?;
    let r_i = super::inradius(&field);
    let levels = default_levels(r_i, options.levels);
    let centroid = domain.boundary_centroid();
    let base = level_curves(&field, domain, &levels, [-centroid[0], -centroid[1]])?;

    let disk_moment: Vec<f64> = levels.iter().map(|t| 2.0 * PI * (radius - t).powi(3)).collect();
    // Contour extraction errors scale like h² per unit length, which dominates
    // the relative term on the small curves near the in-radius.
    let tolerances: Vec<f64> = levels
        .iter()
        .zip(&disk_moment)
        .map(|(t, m)| options.rel_tol * m + 2.0 * PI * (radius - t).max(0.0) * h * h)
        .collect();
    let valid: Vec<bool> = base.rows.iter().map(|r| r.valid).collect();
    let worst = |x0: Point| -> (f64, usize) {
        let moments = base.moments_about(x0);
        let mut best = (f64::INFINITY, 0);
        for k in 0..moments.len() {
            if valid[k] {
                let m = disk_moment[k] - moments[k];
                if m < best.0 {
                    best = (m, k);
                }
            }
        }
        best
    };

    let x0 = match options.x0_policy {
        X0Policy::Centroid => [-centroid[0], -centroid[1]],
        X0Policy::Fixed(p) => p,
        X0Policy::Optimize => nelder_mead_max(|p| worst(p).0, [-centroid[0], -centroid[1]], 0.05 * radius),
    };
    let table = base.recentered(x0);
    let margins: Vec<f64> = disk_moment.iter().zip(table.moments()).map(|(d, m)| d - m).collect();
    let (worst_margin, worst_k) = worst(x0);

    let convex = domain.is_convex(options.geometry_tol);
    let symmetry_defect = reflection_defect(domain) / domain.perimeter();
    let centrally_symmetric = symmetry_defect < options.geometry_tol;
    let reach = domain
        .vertices()
        .iter()
        .map(|p| norm([p[0] + x0[0], p[1] + x0[1]]))
        .fold(0.0, f64::max);
    let containment_excess = reach / radius - 1.0;
    let contained = containment_excess <= options.geometry_tol;

    let any_valid = valid.iter().any(|&v| v);
    let all_clear = (0..margins.len()).filter(|&k| valid[k]).all(|k| margins[k] >= tolerances[k]);
    let any_violation = (0..margins.len()).filter(|&k| valid[k]).any(|k| margins[k] < -tolerances[k]);
    let centred = options.x0_policy == X0Policy::Centroid;
    let (verdict, decided_by) = if contained {
        (SubordinacyVerdict::Subordinate, "contained_in_disk")
    } else if convex && centrally_symmetric && centred {
        (SubordinacyVerdict::Subordinate, "convex_centrally_symmetric")
    } else if !any_valid {
        (SubordinacyVerdict::Inconclusive, "no_valid_levels")
    } else if all_clear {
        (SubordinacyVerdict::Subordinate, "margins")
    } else if any_violation {
        (SubordinacyVerdict::NotSubordinate, "margins")
    } else {
        (SubordinacyVerdict::Inconclusive, "margins")
    };

    Ok(SubordinacyReport {
        x0,
        x0_policy: options.x0_policy,
        radius,
        t: levels.clone(),
        margins,
        tolerances,
        verdict,
        decided_by: decided_by.into(),
        worst_t: if any_valid { levels[worst_k] } else { f64::NAN },
        worst_margin,
        contained_in_disk: contained,
        convex,
        centrally_symmetric,
        convex_centrally_symmetric: convex && centrally_symmetric,
        symmetry_defect,
        containment_excess,
        levels_checked: valid.iter().filter(|&&v| v).count(),
        valid,
        table,
    })
}

/// Directed Hausdorff distance from the reflected boundary vertices to the
/// boundary. Reflection makes the two directed distances equal.
fn reflection_defect(domain: &DomainSpec) -> f64 {
    let c = domain.boundary_centroid();
    let tree = RTree::bulk_load(
        domain
            .boundary
            .segments()
            .map(|(a, b)| Line::new(a, b))
            .collect::<Vec<_>>(),
    );
    domain
        .vertices()
        .iter()
        .map(|p| {
            let q = [2.0 * c[0] - p[0], 2.0 * c[1] - p[1]];
            tree.nearest_neighbor(&q).map(|l| l.distance_2(&q).sqrt()).unwrap_or(f64::INFINITY)
        })
        .fold(0.0, f64::max)
}

/// Maximize `f` over the plane with the Nelder–Mead simplex method.
fn nelder_mead_max<F: Fn(Point) -> f64>(f: F, start: Point, step: f64) -> Point {
    let g = |p: Point| -f(p);
    let mut simplex = [start, [start[0] + step, start[1]], [start[0], start[1] + step]];
    let mut values = simplex.map(g);
    for _ in 0..200 {
        let mut order = [0, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);
        if (values[2] - values[0]).abs() <= 1e-12 * values[0].abs().max(1e-300)
            && norm(sub(simplex[2], simplex[0])) < 1e-9 * step.max(1.0)
        {
            break;
        }
        let c = [0.5 * (simplex[0][0] + simplex[1][0]), 0.5 * (simplex[0][1] + simplex[1][1])];
        let along = |s: f64| [c[0] + s * (simplex[2][0] - c[0]), c[1] + s * (simplex[2][1] - c[1])];
        let reflected = along(-1.0);
        let fr = g(reflected);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = g(expanded);
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
        } else {
            let contracted = if fr < values[2] { along(-0.5) } else { along(0.5) };
            let fc = g(contracted);
            if fc < values[2].min(fr) {
                simplex[2] = contracted;
                values[2] = fc;
            } else {
                for k in 1..3 {
                    simplex[k] = [
                        0.5 * (simplex[0][0] + simplex[k][0]),
                        0.5 * (simplex[0][1] + simplex[k][1]),
                    ];
                    values[k] = g(simplex[k]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    simplex[best]
}

/// Moment of inertia of a closed curve about its arc-length centroid versus
/// the circle bound `ℓ³/4π²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HurwitzGap {
    pub moment: f64,
    pub bound: f64,
    /// `bound − moment`.
    pub margin: f64,
    pub length: f64,
    pub centroid: Point,
}

pub fn hurwitz_gap(curve: &Polyline) -> Result<HurwitzGap> {
    if !curve.closed {
        return Err(Error::InvalidCurve("the moment bound needs a closed curve".into()));
    }
    if curve.points.len() < 2 {
        return Err(Error::InvalidCurve("curve has fewer than 2 points".into()));
    }
    let length = curve.length();
    if !(length > 0.0) {
        return Err(Error::InvalidCurve("curve has zero length".into()));
    }
    let c = curve.centroid();
    let moment: f64 = curve
        .segments()
        .map(|(p, q)| {
            let (p, q) = (sub(p, c), sub(q, c));
            let l = norm(sub(q, p));
            l * (p[0] * p[0] + p[1] * p[1] + p[0] * q[0] + p[1] * q[1] + q[0] * q[0] + q[1] * q[1]) / 3.0
        })
        .sum();
    let bound = length.powi(3) / (4.0 * PI * PI);
    Ok(HurwitzGap {
        moment,
        bound,
        margin: bound - moment,
        length,
        centroid: c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_moment_of_inertia() {
        let sq = Polyline::closed(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        let g = hurwitz_gap(&sq).unwrap();
        assert!((g.moment - 4.0 / 3.0).abs() < 1e-14);
        assert!((g.bound - 64.0 / (4.0 * PI * PI)).abs() < 1e-14);
        assert!(g.margin > 0.0);
    }

    #[test]
    fn open_curves_are_rejected() {
        let open = Polyline { points: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]], closed: false };
        assert!(matches!(hurwitz_gap(&open), Err(Error::InvalidCurve(_))));
    }

    #[test]
    fn disk_is_subordinate_with_small_margins() {
        let d = DomainSpec::disk(1.0, 1024).unwrap();
        let r = subordinacy_check(&d, d.matched_radius(), &SubordinacyOptions::default()).unwrap();
        assert_eq!(r.verdict, SubordinacyVerdict::Subordinate);
        assert!(r.contained_in_disk);
        for k in 0..r.t.len() {
            if r.valid[k] {
                assert!(r.margins[k].abs() <= r.tolerances[k], "t={} margin={}", r.t[k], r.margins[k]);
            }
        }
    }

    #[test]
    fn ellipse_is_subordinate_through_symmetry() {
        let d = DomainSpec::ellipse(1.2, 0.8, 1024).unwrap().with_perimeter(2.0 * PI).unwrap();
        let r = subordinacy_check(&d, 1.0, &SubordinacyOptions::default()).unwrap();
        assert_eq!(r.verdict, SubordinacyVerdict::Subordinate);
        assert_eq!(r.decided_by, "convex_centrally_symmetric");
        assert!(!r.contained_in_disk);
        assert!(r.worst_margin >= -r.tolerances.iter().cloned().fold(0.0, f64::max));
    }

    #[test]
    fn optimized_x0_does_not_worsen_the_worst_margin() {
        let d = DomainSpec::rounded_square(1.0, 4.0, 512)
            .unwrap()
            .translated([0.3, 0.1])
            .unwrap();
        let radius = d.matched_radius();
        let opts = SubordinacyOptions { h: Some(radius / 128.0), levels: 16, ..Default::default() };
        let centred = subordinacy_check(&d, radius, &opts).unwrap();
        let searched =
            subordinacy_check(&d, radius, &SubordinacyOptions { x0_policy: X0Policy::Optimize, ..opts }).unwrap();
        assert!(searched.worst_margin >= centred.worst_margin - 1e-12);
    }

    #[test]
    fn mismatched_radius_is_rejected() {
        let d = DomainSpec::disk(1.0, 128).unwrap();
        assert!(subordinacy_check(&d, 2.0, &SubordinacyOptions::default()).is_err());
    }
}
