use rayon::prelude::*;
use rstar::primitives::Line;
use rstar::{PointDistance, RTree};
use serde::{Deserialize, Serialize};

use super::{DomainSpec, Point};
use crate::error::{Error, Result};

/// Minimum number of cells along the longer side of the bounding box.
pub const MIN_CELLS: usize = 64;

/// Distance to the boundary sampled on a regular grid. Values are positive
/// inside and negative (minus the distance) outside.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceField {
    pub h: f64,
    /// Lower-left grid node.
    pub origin: Point,
    pub nx: usize,
    pub ny: usize,
    /// Row-major, `values[j * nx + i]` at `origin + h (i, j)`.
    pub values: Vec<f64>,
}

impl DistanceField {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn node(&self, i: usize, j: usize) -> Point {
        [self.origin[0] + self.h * i as f64, self.origin[1] + self.h * j as f64]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Bilinear interpolation, `NaN` outside the grid.
    pub fn sample(&self, p: Point) -> f64 {
        let x = (p[0] - self.origin[0]) / self.h;
        let y = (p[1] - self.origin[1]) / self.h;
        if x < 0.0 || y < 0.0 || x > (self.nx - 1) as f64 || y > (self.ny - 1) as f64 {
            return f64::NAN;
        }
        let i = (x.floor() as usize).min(self.nx - 2);
        let j = (y.floor() as usize).min(self.ny - 2);
        let (fx, fy) = (x - i as f64, y - j as f64);
        (1.0 - fx) * (1.0 - fy) * self.at(i, j)
            + fx * (1.0 - fy) * self.at(i + 1, j)
            + (1.0 - fx) * fy * self.at(i, j + 1)
            + fx * fy * self.at(i + 1, j + 1)
    }
}

/// Exact distance from every grid node to the boundary polyline, signed by
/// the even-odd rule.
pub fn distance_field(domain: &DomainSpec, h: f64) -> Result<DistanceField> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidDomain(format!("grid spacing must be positive, got {h}")));
    }
    let pts = domain.vertices();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    if !(extent > 0.0) || !(hi[0] > lo[0] && hi[1] > lo[1]) {
        return Err(Error::InvalidDomain("degenerate bounding box".into()));
    }
    if extent / h < MIN_CELLS as f64 {
        return Err(Error::InvalidDomain(format!(
            "spacing {h} gives fewer than {MIN_CELLS} cells across the bounding box"
        )));
    }

    // Nodes are placed symmetrically about the box centre with a two-cell margin.
    let mid = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let half = [
        ((0.5 * (hi[0] - lo[0])) / h).ceil() as usize + 2,
        ((0.5 * (hi[1] - lo[1])) / h).ceil() as usize + 2,
    ];
    let origin = [mid[0] - half[0] as f64 * h, mid[1] - half[1] as f64 * h];
    let (nx, ny) = (2 * half[0] + 1, 2 * half[1] + 1);

    let tree = RTree::bulk_load(
        domain
            .boundary
            .segments()
            .map(|(a, b)| Line::new(a, b))
            .collect::<Vec<_>>(),
    );
    let edges: Vec<(Point, Point)> = domain.boundary.segments().collect();

    let rows: Vec<Vec<f64>> = (0..ny)
        .into_par_iter()
        .map(|j| {
            let y = origin[1] + h * j as f64;
            let mut crossings: Vec<f64> = edges
                .iter()
                .filter(|(a, b)| (a[1] > y) != (b[1] > y))
                .map(|(a, b)| a[0] + (y - a[1]) / (b[1] - a[1]) * (b[0] - a[0]))
                .collect();
            crossings.sort_by(f64::total_cmp);
            (0..nx)
                .map(|i| {
                    let p = [origin[0] + h * i as f64, y];
                    let d = tree
                        .nearest_neighbor(&p)
                        .map(|l| l.distance_2(&p).sqrt())
                        .unwrap_or(f64::INFINITY);
                    let left = crossings.partition_point(|&x| x < p[0]);
                    if left % 2 == 1 {
                        d
                    } else {
                        -d
                    }
                })
                .collect()
        })
        .collect();

    Ok(DistanceField {
        h,
        origin,
        nx,
        ny,
        values: rows.concat(),
    })
}

/// Largest sampled distance, refined by a parabola through the neighbours in
/// each grid direction. The refinement is clamped to `[0, h]`.
pub fn inradius(field: &DistanceField) -> f64 {
    let (mut best, mut bi, mut bj) = (f64::NEG_INFINITY, 0, 0);
    for j in 0..field.ny {
        for i in 0..field.nx {
            let v = field.at(i, j);
            if v > best {
                best = v;
                bi = i;
                bj = j;
            }
        }
    }
    if bi == 0 || bj == 0 || bi + 1 >= field.nx || bj + 1 >= field.ny {
        return best;
    }
    let gain = |m: f64, c: f64, p: f64| {
        let curv = 2.0 * c - m - p;
        if curv > 0.0 {
            (p - m).powi(2) / (8.0 * curv)
        } else {
            0.0
        }
    };
    let dx = gain(field.at(bi - 1, bj), best, field.at(bi + 1, bj));
    let dy = gain(field.at(bi, bj - 1), best, field.at(bi, bj + 1));
    best + (dx + dy).clamp(0.0, field.h)
}
