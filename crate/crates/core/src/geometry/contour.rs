use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{norm, sub, DistanceField, DomainSpec, Point};
use crate::error::{Error, Result};

/// Data for one level `t`: the curve `{ρ = t}` extracted by marching squares.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelRow {
    pub t: f64,
    pub length: f64,
    /// `∫ |x + x₀|²` over the extracted polyline.
    pub moment: f64,
    pub components: usize,
    pub valid: bool,
    /// No curve at this level (`t` at or above the in-radius).
    pub empty: bool,
    /// Largest `|x + x₀|` over the curve vertices.
    pub max_radius: f64,
    /// `Σ x̄ ℓ`, for re-centring without re-extraction.
    pub first_moment: Point,
    /// `∫ |x|²` over the polyline.
    pub second_moment: f64,
    #[serde(skip)]
    pub segments: Vec<(Point, Point)>,
}

impl LevelRow {
    fn moment_about(&self, x0: Point) -> f64 {
        self.second_moment
            + 2.0 * (x0[0] * self.first_moment[0] + x0[1] * self.first_moment[1])
            + (x0[0] * x0[0] + x0[1] * x0[1]) * self.length
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelCurveTable {
    pub x0: Point,
    pub h: f64,
    pub inradius: f64,
    /// Boundary length `L` (the level `t = 0`).
    pub boundary_length: f64,
    /// `∫_{∂Ω} |x + x₀|²`, exact on the boundary polygon.
    pub boundary_moment: f64,
    pub boundary_first_moment: Point,
    pub boundary_second_moment: f64,
    pub rows: Vec<LevelRow>,
    /// Levels where the number of components changes, located by bisection.
    pub topology_changes: Vec<f64>,
}

impl LevelCurveTable {
    pub fn t_grid(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.length).collect()
    }

    pub fn moments(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.moment).collect()
    }

    /// The same table with moments taken about `x0`.
    pub fn recentered(&self, x0: Point) -> Self {
        let mut t = self.clone();
        t.x0 = x0;
        t.boundary_moment = boundary_moment_about(self, x0);
        for row in t.rows.iter_mut() {
            row.moment = row.moment_about(x0);
            row.max_radius = max_radius(&row.segments, x0);
        }
        t
    }

    /// Moments at every level for an arbitrary `x0`, without cloning.
    pub fn moments_about(&self, x0: Point) -> Vec<f64> {
        self.rows.iter().map(|r| r.moment_about(x0)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,length,moment,components,valid\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:.11e},{:.11e},{:.11e},{},{}",
                r.t, r.length, r.moment, r.components, r.valid
            );
        }
        out
    }
}

fn boundary_moment_about(t: &LevelCurveTable, x0: Point) -> f64 {
    t.boundary_second_moment
        + 2.0 * (x0[0] * t.boundary_first_moment[0] + x0[1] * t.boundary_first_moment[1])
        + (x0[0] * x0[0] + x0[1] * x0[1]) * t.boundary_length
}

fn max_radius(segments: &[(Point, Point)], x0: Point) -> f64 {
    segments
        .iter()
        .flat_map(|(a, b)| [*a, *b])
        .map(|p| norm([p[0] + x0[0], p[1] + x0[1]]))
        .fold(0.0, f64::max)
}

/// Uniform interior levels `k r_i / n`, `k = 1, …, n − 1`.
pub fn default_levels(inradius: f64, n: usize) -> Vec<f64> {
    (1..n).map(|k| k as f64 * inradius / n as f64).collect()
}

/// Levels closer than this many cells to the in-radius are too small for the
/// grid and marked invalid.
pub const RESOLVED_CELLS: f64 = 8.0;

struct Extracted {
    segments: Vec<(Point, Point)>,
    components: usize,
    open: bool,
}

const BOTTOM: u8 = 0;
const RIGHT: u8 = 1;
const TOP: u8 = 2;
const LEFT: u8 = 3;

/// Position in `[0, 1]` of the crossing of level `t` on the grid edge from
/// node `a` to its neighbour `b`, from the parabola through the next node on
/// the same grid line. The end values bracket `t`, so the parabola has exactly
/// one root on the edge; linear interpolation is the fallback.
fn crossing(field: &DistanceField, a: (usize, usize), b: (usize, usize), t: f64) -> f64 {
    let (va, vb) = (field.at(a.0, a.1), field.at(b.0, b.1));
    let linear = ((t - va) / (vb - va)).clamp(0.0, 1.0);
    let (di, dj) = (b.0 - a.0, b.1 - a.1);
    let (fa, fb) = (va - t, vb - t);
    // q(s) = fa + c1 s + c2 s² on the edge's own parameter
    let (c1, c2) = if b.0 + di < field.nx && b.1 + dj < field.ny {
        let fc = field.at(b.0 + di, b.1 + dj) - t;
        let c2 = 0.5 * (fc - 2.0 * fb + fa);
        (fb - fa - c2, c2)
    } else if a.0 >= di && a.1 >= dj {
        let fm = field.at(a.0 - di, a.1 - dj) - t;
        let c2 = 0.5 * (fb - 2.0 * fa + fm);
        (fb - fa - c2, c2)
    } else {
        return linear;
    };
    if c2.abs() <= 1e-12 * c1.abs() {
        return linear;
    }
    let disc = c1 * c1 - 4.0 * c2 * fa;
    if disc < 0.0 {
        return linear;
    }
    // numerically stable pair of roots
    let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
    let roots = [q / c2, if q != 0.0 { fa / q } else { f64::NAN }];
    roots.into_iter().find(|r| (0.0..=1.0).contains(r)).unwrap_or(linear)
}

/// Iso-contour `{field = t}` by marching squares; crossings on cell edges come
/// from [`crossing`]. Saddle cells are resolved by the cell-centre average.
fn extract(field: &DistanceField, t: f64) -> Extracted {
    let nx = field.nx;
    let key = |i: usize, j: usize, edge: u8| -> u64 {
        // horizontal edges are owned by their left node, vertical by their lower node
        let (i, j, vertical) = match edge {
            BOTTOM => (i, j, 0),
            TOP => (i, j + 1, 0),
            LEFT => (i, j, 1),
            _ => (i + 1, j, 1),
        };
        (((j * nx + i) as u64) << 1) | vertical
    };
    let point = |i: usize, j: usize, edge: u8| -> Point {
        let (a, b) = match edge {
            BOTTOM => ((i, j), (i + 1, j)),
            TOP => ((i, j + 1), (i + 1, j + 1)),
            LEFT => ((i, j), (i, j + 1)),
            _ => ((i + 1, j), (i + 1, j + 1)),
        };
        let s = crossing(field, a, b, t);
        let pa = field.node(a.0, a.1);
        let pb = field.node(b.0, b.1);
        [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]
    };

    let mut segs: Vec<(u64, u64, Point, Point)> = Vec::new();
    for j in 0..field.ny - 1 {
        for i in 0..nx - 1 {
            let v = [field.at(i, j), field.at(i + 1, j), field.at(i + 1, j + 1), field.at(i, j + 1)];
            let case = v
                .iter()
                .enumerate()
                .fold(0u8, |c, (k, &x)| if x > t { c | (1 << k) } else { c });
            let centre_inside = || 0.25 * v.iter().sum::<f64>() > t;
            let pairs: &[(u8, u8)] = match case {
                0 | 15 => &[],
                1 | 14 => &[(LEFT, BOTTOM)],
                2 | 13 => &[(BOTTOM, RIGHT)],
                3 | 12 => &[(LEFT, RIGHT)],
                4 | 11 => &[(RIGHT, TOP)],
                6 | 9 => &[(BOTTOM, TOP)],
                7 | 8 => &[(LEFT, TOP)],
                5 => {
                    if centre_inside() {
                        &[(BOTTOM, RIGHT), (LEFT, TOP)]
                    } else {
                        &[(LEFT, BOTTOM), (RIGHT, TOP)]
                    }
                }
                _ => {
                    if centre_inside() {
                        &[(LEFT, BOTTOM), (RIGHT, TOP)]
                    } else {
                        &[(BOTTOM, RIGHT), (LEFT, TOP)]
                    }
                }
            };
            for &(e1, e2) in pairs {
                segs.push((key(i, j, e1), key(i, j, e2), point(i, j, e1), point(i, j, e2)));
            }
        }
    }

    // Components by union-find over shared edge crossings.
    let mut index: HashMap<u64, usize> = HashMap::with_capacity(2 * segs.len());
    let mut degree: Vec<u32> = Vec::new();
    let mut parent: Vec<usize> = Vec::new();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(ka, kb, _, _) in &segs {
        let mut id = |k: u64| {
            *index.entry(k).or_insert_with(|| {
                parent.push(parent.len());
                degree.push(0);
                parent.len() - 1
            })
        };
        let (a, b) = (id(ka), id(kb));
        degree[a] += 1;
        degree[b] += 1;
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let components = (0..parent.len()).filter(|&x| find(&mut parent, x) == x).count();
    let open = degree.iter().any(|&d| d != 2);

    Extracted {
        segments: segs.into_iter().map(|(_, _, a, b)| (a, b)).collect(),
        components,
        open,
    }
}

fn summarize(t: f64, ex: Extracted, x0: Point, h: f64, inradius: f64) -> LevelRow {
    let mut length = 0.0;
    let mut first = [0.0, 0.0];
    let mut second = 0.0;
    for (a, b) in &ex.segments {
        let l = norm(sub(*b, *a));
        let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        length += l;
        first[0] += m[0] * l;
        first[1] += m[1] * l;
        // exact for the straight segment
        second += (m[0] * m[0] + m[1] * m[1] + l * l / 12.0) * l;
    }
    let empty = ex.segments.is_empty();
    let mut row = LevelRow {
        t,
        length,
        moment: 0.0,
        components: ex.components,
        valid: !empty && !ex.open && inradius - t > RESOLVED_CELLS * h,
        empty,
        max_radius: max_radius(&ex.segments, x0),
        first_moment: first,
        second_moment: second,
        segments: ex.segments,
    };
    row.moment = row.moment_about(x0);
    row
}

/// Level curves of the distance field at the levels `t_grid`, with moments
/// about `x0`.
pub fn level_curves(
    field: &DistanceField,
    domain: &DomainSpec,
    t_grid: &[f64],
    x0: Point,
) -> Result<LevelCurveTable> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParams("empty level grid".into()));
    }
    if t_grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::InvalidParams("levels must be positive".into()));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParams("levels must be strictly increasing".into()));
    }
    let h = field.h;
    let r_i = super::inradius(field);

    let mut rows: Vec<LevelRow> = t_grid
        .par_iter()
        .map(|&t| summarize(t, extract(field, t), x0, h, r_i))
        .collect();

    // Flag levels close to a change in the number of components.
    let mut changes = Vec::new();
    for k in 0..rows.len().saturating_sub(1) {
        let (a, b) = (&rows[k], &rows[k + 1]);
        if a.empty || b.empty || a.components == b.components {
            continue;
        }
        let (mut lo, mut hi) = (a.t, b.t);
        let target = a.components;
        while hi - lo > 0.25 * h {
            let mid = 0.5 * (lo + hi);
            if extract(field, mid).components == target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        changes.push(0.5 * (lo + hi));
    }
    for row in rows.iter_mut() {
        if changes.iter().any(|c| (row.t - c).abs() <= h) {
            row.valid = false;
        }
    }

    let mut first = [0.0, 0.0];
    let mut second = 0.0;
    for (p, q) in domain.boundary.segments() {
        let l = norm(sub(q, p));
        first[0] += 0.5 * l * (p[0] + q[0]);
        first[1] += 0.5 * l * (p[1] + q[1]);
        second += l * (p[0] * p[0] + p[1] * p[1] + p[0] * q[0] + p[1] * q[1] + q[0] * q[0] + q[1] * q[1]) / 3.0;
    }
    let mut table = LevelCurveTable {
        x0,
        h,
        inradius: r_i,
        boundary_length: domain.perimeter(),
        boundary_moment: 0.0,
        boundary_first_moment: first,
        boundary_second_moment: second,
        rows,
        topology_changes: changes,
    };
    table.boundary_moment = boundary_moment_about(&table, x0);
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::super::distance_field;
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn disk_level_closed_forms() {
        let d = DomainSpec::disk(1.0, 1024).unwrap();
        let f = distance_field(&d, 1.0 / 256.0).unwrap();
        let table = level_curves(&f, &d, &[0.3], [0.0, 0.0]).unwrap();
        let row = &table.rows[0];
        assert!((row.length / (2.0 * PI * 0.7) - 1.0).abs() < 1e-3);
        assert!((row.moment / (2.0 * PI * 0.343) - 1.0).abs() < 2e-3);
        assert_eq!(row.components, 1);
        assert!(row.valid);
    }

    #[test]
    fn crossings_are_exact_for_quadratic_profiles() {
        // f = 1 − x² along the rows, on nodes x = -1, -0.5, …, 1
        let xs: Vec<f64> = (0..5).map(|i| -1.0 + 0.5 * i as f64).collect();
        let row: Vec<f64> = xs.iter().map(|x| 1.0 - x * x).collect();
        let field = DistanceField { h: 0.5, origin: [-1.0, 0.0], nx: 5, ny: 2, values: [row.clone(), row].concat() };
        let t = 0.5;
        let s = crossing(&field, (0, 0), (1, 0), t);
        let x = -1.0 + 0.5 * s;
        assert!((x + (1.0f64 - t).sqrt()).abs() < 1e-14, "{x}");
        // the last edge has no node beyond it and looks backwards instead
        let s = crossing(&field, (3, 0), (4, 0), t);
        assert!((0.5 + 0.5 * s - (1.0f64 - t).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn square_offsets_are_squares() {
        let d = DomainSpec::polygon(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let f = distance_field(&d, 1.0 / 200.0).unwrap();
        let table = level_curves(&f, &d, &[0.2], [0.0, 0.0]).unwrap();
        let l = table.rows[0].length;
        // marching squares cuts the corners on the diagonal ridges by O(h)
        assert!((l - 2.4).abs() < 4.0 * f.h, "{l}");
        assert!(l <= 4.0 - 2.0 * PI * 0.2);
    }

    #[test]
    fn levels_above_inradius_are_empty() {
        let d = DomainSpec::disk(1.0, 256).unwrap();
        let f = distance_field(&d, 1.0 / 64.0).unwrap();
        let table = level_curves(&f, &d, &[0.5, 1.5], [0.0, 0.0]).unwrap();
        assert!(table.rows[1].empty && !table.rows[1].valid);
        assert_eq!(table.rows[1].length, 0.0);
        assert!(level_curves(&f, &d, &[0.5, 0.4], [0.0, 0.0]).is_err());
    }

    #[test]
    fn dumbbell_splits_into_two_components() {
        // two 1×1 squares joined by a thin neck of width 0.2
        let d = DomainSpec::polygon(vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 0.4],
            [1.5, 0.4],
            [1.5, 0.0],
            [2.5, 0.0],
            [2.5, 1.0],
            [1.5, 1.0],
            [1.5, 0.6],
            [1.0, 0.6],
            [1.0, 1.0],
            [0.0, 1.0],
        ])
        .unwrap();
        let f = distance_field(&d, 1.0 / 128.0).unwrap();
        let table = level_curves(&f, &d, &[0.05, 0.2, 0.3], [0.0, 0.0]).unwrap();
        assert_eq!(table.rows[0].components, 1);
        assert_eq!(table.rows[1].components, 2);
        assert_eq!(table.topology_changes.len(), 1);
        assert!((table.topology_changes[0] - 0.1).abs() < 2.0 * f.h);
    }

    #[test]
    fn recentering_matches_direct_extraction() {
        let d = DomainSpec::ellipse(1.2, 0.8, 512).unwrap();
        let f = distance_field(&d, 1.0 / 128.0).unwrap();
        let a = level_curves(&f, &d, &[0.2, 0.4], [0.3, -0.1]).unwrap();
        let b = level_curves(&f, &d, &[0.2, 0.4], [0.0, 0.0]).unwrap().recentered([0.3, -0.1]);
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!((x.moment - y.moment).abs() < 1e-10);
            assert!((x.max_radius - y.max_radius).abs() < 1e-12);
        }
        assert!((a.boundary_moment - b.boundary_moment).abs() < 1e-10);
        let csv = a.to_csv();
        assert!(csv.starts_with("t,length,moment,components,valid\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
