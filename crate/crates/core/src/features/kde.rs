//! Gaussian kernel density surfaces and functional centers.
//!
//! f̂(x, y) = 1/(n h²) Σ K((x − xᵢ)/h, (y − yᵢ)/h) with K(u, v) = e^{−(u²+v²)/2} / 2π.

use std::f64::consts::PI;

use crate::geom::Point;

use super::FeatureError;

/// Kernel contributions beyond this many bandwidths are below 1e-21 of the
/// peak and skipped.
const CUTOFF_H: f64 = 10.0;

/// Cell-centered grid: `origin` is the min corner, row 0 at min y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub origin: Point,
    pub cell: f64,
    pub ncols: usize,
    pub nrows: usize,
}

impl GridSpec {
    /// Grid covering `points` padded by `pad` meters on every side.
    pub fn covering(points: &[Point], pad: f64, cell: f64) -> Option<GridSpec> {
        let b = crate::geom::BBox::of_points(points)?.inflate(pad);
        Some(GridSpec {
            origin: Point::new(b.min_x, b.min_y),
            cell,
            ncols: ((b.width() / cell).ceil() as usize).max(1),
            nrows: ((b.height() / cell).ceil() as usize).max(1),
        })
    }

    pub fn cell_center(&self, col: usize, row: usize) -> Point {
        Point::new(
            self.origin.x + (col as f64 + 0.5) * self.cell,
            self.origin.y + (row as f64 + 0.5) * self.cell,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensitySurface {
    pub grid: GridSpec,
    /// Row-major, row 0 at min y.
    pub values: Vec<f64>,
    pub h: f64,
    pub n: usize,
}

impl DensitySurface {
    /// Wraps arbitrary cell values (used for analytic test surfaces).
    pub fn from_values(grid: GridSpec, values: Vec<f64>, h: f64) -> Self {
        assert_eq!(values.len(), grid.ncols * grid.nrows);
        Self { grid, values, h, n: 0 }
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.grid.ncols + col]
    }

    /// Σ values × cell area.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell * self.grid.cell
    }
}

fn check(points: &[Point], h: f64) -> Result<(), FeatureError> {
    if points.is_empty() {
        return Err(FeatureError::EmptyPoints);
    }
    if !(h > 0.0) {
        return Err(FeatureError::NonPositiveBandwidth(h));
    }
    Ok(())
}

/// Density evaluated at every cell center. Separable: each point adds an
/// outer product of 1-D Gaussian weights over its cutoff window.
pub fn kde_surface(points: &[Point], h: f64, grid: GridSpec) -> Result<DensitySurface, FeatureError> {
    check(points, h)?;
    if !(grid.cell > 0.0) || grid.ncols == 0 || grid.nrows == 0 {
        return Err(FeatureError::BadGrid);
    }
    let mut values = vec![0.0; grid.ncols * grid.nrows];
    let norm = 1.0 / (points.len() as f64 * h * h * 2.0 * PI);
    let reach = CUTOFF_H * h;
    let span = |v: f64, o: f64, n: usize| {
        let lo = ((v - reach - o) / grid.cell - 0.5).floor().max(0.0) as usize;
        let hi = (((v + reach - o) / grid.cell - 0.5).ceil().max(-1.0) + 1.0) as usize;
        (lo.min(n), hi.min(n))
    };
    let mut wx = Vec::new();
    for p in points {
        let (c0, c1) = span(p.x, grid.origin.x, grid.ncols);
        let (r0, r1) = span(p.y, grid.origin.y, grid.nrows);
        wx.clear();
        wx.extend((c0..c1).map(|c| {
            let u = (grid.origin.x + (c as f64 + 0.5) * grid.cell - p.x) / h;
            (-0.5 * u * u).exp()
        }));
        for r in r0..r1 {
            let v = (grid.origin.y + (r as f64 + 0.5) * grid.cell - p.y) / h;
            let wy = (-0.5 * v * v).exp() * norm;
            let row = &mut values[r * grid.ncols + c0..r * grid.ncols + c1];
            for (cell, w) in row.iter_mut().zip(&wx) {
                *cell += w * wy;
            }
        }
    }
    Ok(DensitySurface {
        grid,
        values,
        h,
        n: points.len(),
    })
}

/// Direct Eq. S6 evaluation at one location.
pub fn kde_at(points: &[Point], h: f64, at: &Point) -> Result<f64, FeatureError> {
    check(points, h)?;
    let sum: f64 = points
        .iter()
        .map(|p| {
            let (u, v) = ((at.x - p.x) / h, (at.y - p.y) / h);
            (-0.5 * (u * u + v * v)).exp()
        })
        .sum();
    Ok(sum / (points.len() as f64 * h * h * 2.0 * PI))
}

/// Interior cells whose central-difference Hessian is negative definite and
/// whose value strictly exceeds all 8 neighbours. 8-connected qualifying
/// cells merge into one center at their value-weighted mean.
pub fn functional_centers(s: &DensitySurface) -> Result<Vec<Point>, FeatureError> {
    let g = s.grid;
    if g.ncols < 3 || g.nrows < 3 {
        return Err(FeatureError::BadGrid);
    }
    let f = |c: usize, r: usize| s.get(c, r);
    let d2 = g.cell * g.cell;
    let mut hits = vec![false; g.ncols * g.nrows];
    for r in 1..g.nrows - 1 {
        for c in 1..g.ncols - 1 {
            let v = f(c, r);
            let fxx = (f(c + 1, r) - 2.0 * v + f(c - 1, r)) / d2;
            let fyy = (f(c, r + 1) - 2.0 * v + f(c, r - 1)) / d2;
            let fxy = (f(c + 1, r + 1) - f(c - 1, r + 1) - f(c + 1, r - 1) + f(c - 1, r - 1)) / (4.0 * d2);
            if !(fxx < 0.0 && fxx * fyy - fxy * fxy > 0.0) {
                continue;
            }
            let strict = (r - 1..=r + 1)
                .flat_map(|rr| (c - 1..=c + 1).map(move |cc| (cc, rr)))
                .filter(|&(cc, rr)| (cc, rr) != (c, r))
                .all(|(cc, rr)| v > f(cc, rr));
            hits[r * g.ncols + c] = strict;
        }
    }
    let mut seen = vec![false; hits.len()];
    let mut centers = Vec::new();
    for start in 0..hits.len() {
        if !hits[start] || seen[start] {
            continue;
        }
        let (mut wx, mut wy, mut w) = (0.0, 0.0, 0.0);
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            let (c, r) = (i % g.ncols, i / g.ncols);
            let p = g.cell_center(c, r);
            let v = s.values[i].abs().max(f64::MIN_POSITIVE);
            wx += v * p.x;
            wy += v * p.y;
            w += v;
            for rr in r.saturating_sub(1)..=(r + 1).min(g.nrows - 1) {
                for cc in c.saturating_sub(1)..=(c + 1).min(g.ncols - 1) {
                    let j = rr * g.ncols + cc;
                    if hits[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        centers.push(Point::new(wx / w, wy / w));
    }
    Ok(centers)
}

/// Distance from the centroid to the nearest center; `None` without centers.
pub fn distance_to_center(centroid: &Point, centers: &[Point]) -> Option<f64> {
    centers.iter().map(|c| c.distance(centroid)).min_by(f64::total_cmp)
}
