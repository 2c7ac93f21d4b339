//! Concave hulls by alpha-filtered Delaunay erosion.
//!
//! Start from the Delaunay triangulation (whose union is the convex hull) and
//! peel boundary triangles whose circumradius exceeds `1 / alpha`, largest
//! first. A triangle is only peeled when exactly one of its edges is on the
//! boundary and its opposite vertex is still interior, so the region stays a
//! single simple polygon and every input point stays inside or on it.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use delaunator::{next_halfedge, triangulate, EMPTY};

use super::{cross, GeomError, Point, Polygon};

/// Andrew's monotone chain. Collinear boundary points are dropped.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn circumradius(a: &Point, b: &Point, c: &Point) -> f64 {
    let ab = a.distance(b);
    let bc = b.distance(c);
    let ca = c.distance(a);
    let area2 = cross(a, b, c).abs();
    if area2 == 0.0 {
        f64::INFINITY
    } else {
        ab * bc * ca / (2.0 * area2)
    }
}

#[derive(PartialEq)]
struct Candidate {
    radius: f64,
    triangle: usize,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.radius
            .total_cmp(&other.radius)
            .then_with(|| other.triangle.cmp(&self.triangle))
    }
}

/// Concave hull of `points` with the given `alpha` (1/meters).
///
/// As `alpha` goes to zero no triangle is peeled and the result is the
/// convex hull. The boundary only visits input points.
pub fn alpha_shape(points: &[Point], alpha: f64) -> Result<Polygon, GeomError> {
    if !(alpha > 0.0) {
        return Err(GeomError::NonPositiveAlpha(alpha));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(GeomError::NonFinite);
    }
    if points.len() < 3 {
        return Err(GeomError::Collinear);
    }
    // triangulate in a frame anchored at the first point for translation stability
    let o = points[0];
    let local: Vec<delaunator::Point> = points
        .iter()
        .map(|p| delaunator::Point {
            x: p.x - o.x,
            y: p.y - o.y,
        })
        .collect();
    let tri = triangulate(&local);
    let n_tri = tri.triangles.len() / 3;
    if n_tri == 0 {
        return Err(GeomError::Collinear);
    }
    let max_radius = 1.0 / alpha;

    let mut alive = vec![true; n_tri];
    let mut on_boundary = vec![false; points.len()];
    for &v in &tri.hull {
        on_boundary[v] = true;
    }
    let vertex = |e: usize| tri.triangles[e];
    let radius_of = |t: usize| {
        circumradius(
            &points[vertex(3 * t)],
            &points[vertex(3 * t + 1)],
            &points[vertex(3 * t + 2)],
        )
    };
    let edge_on_boundary = |alive: &[bool], e: usize| {
        let twin = tri.halfedges[e];
        twin == EMPTY || !alive[twin / 3]
    };

    let mut heap = BinaryHeap::new();
    for e in 0..tri.triangles.len() {
        if tri.halfedges[e] == EMPTY {
            let t = e / 3;
            heap.push(Candidate {
                radius: radius_of(t),
                triangle: t,
            });
        }
    }

    while let Some(Candidate { radius, triangle: t }) = heap.pop() {
        if !alive[t] || radius <= max_radius {
            if radius <= max_radius {
                break;
            }
            continue;
        }
        let edges = [3 * t, 3 * t + 1, 3 * t + 2];
        let boundary: Vec<usize> = edges
            .iter()
            .copied()
            .filter(|&e| edge_on_boundary(&alive, e))
            .collect();
        if boundary.len() != 1 {
            continue;
        }
        // vertex opposite the boundary edge e is the start of prev(e) = next(next(e))
        let opposite = vertex(next_halfedge(next_halfedge(boundary[0])));
        if on_boundary[opposite] {
            continue;
        }
        alive[t] = false;
        on_boundary[opposite] = true;
        for &e in &edges {
            let twin = tri.halfedges[e];
            if twin != EMPTY && alive[twin / 3] {
                let nt = twin / 3;
                heap.push(Candidate {
                    radius: radius_of(nt),
                    triangle: nt,
                });
            }
        }
    }

    // walk the boundary of the surviving triangles; each boundary vertex has
    // exactly one outgoing boundary halfedge
    let mut next_of = vec![usize::MAX; points.len()];
    let mut start = usize::MAX;
    for e in 0..tri.triangles.len() {
        if alive[e / 3] && edge_on_boundary(&alive, e) {
            let from = vertex(e);
            let to = vertex(next_halfedge(e));
            next_of[from] = to;
            if start == usize::MAX || from < start {
                start = from;
            }
        }
    }
    let mut ring = Vec::new();
    let mut v = start;
    loop {
        ring.push(points[v]);
        v = next_of[v];
        if v == start || v == usize::MAX || ring.len() > points.len() {
            break;
        }
    }
    Polygon::from_ring(ring)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hull_area(pts: &[Point]) -> f64 {
        Polygon::from_ring(convex_hull(pts)).unwrap().area()
    }

    #[test]
    fn square_corners_give_the_square() {
        let pts = [
            Point::new(0., 0.),
            Point::new(10., 0.),
            Point::new(10., 10.),
            Point::new(0., 10.),
        ];
        let s = alpha_shape(&pts, 1e-3).unwrap();
        assert_eq!(s.area(), 100.0);
        assert_eq!(s.exterior().len(), 4);
    }

    #[test]
    fn collinear_points_rejected() {
        let pts: Vec<Point> = (0..5).map(|i| Point::new(i as f64, 2.0 * i as f64)).collect();
        assert_eq!(alpha_shape(&pts, 0.1), Err(GeomError::Collinear));
        assert!(alpha_shape(&pts[..2], 0.1).is_err());
        assert!(alpha_shape(&pts, 0.0).is_err());
    }

    fn c_cloud(seed: u64) -> Vec<Point> {
        // C shape: annulus sector of radii 8..10 spanning 300 degrees
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..400)
            .map(|_| {
                let r = rng.gen_range(8.0..10.0);
                let t = rng.gen_range(0.5..(std::f64::consts::TAU - 0.5));
                Point::new(r * f64::cos(t), r * f64::sin(t))
            })
            .collect()
    }

    #[test]
    fn c_shape_is_concave() {
        let pts = c_cloud(7);
        let s = alpha_shape(&pts, 0.5).unwrap();
        assert!(s.area() < 0.8 * hull_area(&pts));
        for p in &pts {
            assert!(s.covers(p, 1e-9));
        }
    }

    #[test]
    fn tiny_alpha_is_convex_hull() {
        let pts = c_cloud(3);
        let s = alpha_shape(&pts, 1e-6).unwrap();
        assert!((s.area() - hull_area(&pts)).abs() < 1e-9);
    }

    #[test]
    fn area_monotone_over_alpha_grid() {
        let pts = c_cloud(11);
        let mut last = f64::INFINITY;
        for alpha in [0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.8] {
            let a = alpha_shape(&pts, alpha).unwrap().area();
            assert!(a <= last + 1e-9, "alpha {alpha}: {a} > {last}");
            last = a;
        }
    }

    proptest! {
        #[test]
        fn contains_every_input_point(seed in 0u64..1000, alpha in 0.05f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Point> = (0..60).map(|_| Point::new(rng.gen_range(0.0..20.0), rng.gen_range(0.0..20.0))).collect();
            let s = alpha_shape(&pts, alpha).unwrap();
            for p in &pts {
                prop_assert!(s.covers(p, 1e-9));
            }
            prop_assert!(s.area() <= hull_area(&pts) + 1e-9);
        }
    }
}
