use serde::{Deserialize, Serialize};

use super::{closest_on_segment, segments_intersect, simplify_ring, BBox, GeomError, Point};

/// Validated polygon: CCW exterior, CW holes, all rings simple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    exterior: Vec<Point>,
    holes: Vec<Vec<Point>>,
}

/// Shoelace signed area of an open ring (positive when counter-clockwise).
pub fn ring_signed_area(ring: &[Point]) -> f64 {
    if ring.len() < 3 {
        return 0.0;
    }
    let o = ring[0];
    let mut acc = 0.0;
    for i in 1..ring.len() - 1 {
        let a = ring[i];
        let b = ring[i + 1];
        acc += (a.x - o.x) * (b.y - o.y) - (b.x - o.x) * (a.y - o.y);
    }
    acc / 2.0
}

/// Area of the exterior minus holes.
pub fn polygon_area(p: &Polygon) -> f64 {
    p.area()
}

fn normalize_ring(ring: Vec<Point>) -> Result<Vec<Point>, GeomError> {
    if ring.iter().any(|p| !p.is_finite()) {
        return Err(GeomError::NonFinite);
    }
    let mut out: Vec<Point> = Vec::with_capacity(ring.len());
    for p in ring {
        if out.last() != Some(&p) {
            out.push(p);
        }
    }
    while out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    let mut distinct = out.clone();
    distinct.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(GeomError::TooFewVertices(distinct.len()));
    }
    if ring_signed_area(&out) == 0.0 {
        return Err(GeomError::ZeroArea);
    }
    check_simple(&out)?;
    Ok(out)
}

fn check_simple(ring: &[Point]) -> Result<(), GeomError> {
    let n = ring.len();
    for i in 0..n {
        let a1 = ring[i];
        let a2 = ring[(i + 1) % n];
        let (a_lo, a_hi) = (a1.x.min(a2.x), a1.x.max(a2.x));
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                // adjacent segments share a vertex; reject only if they fold back
                let (shared, other_a, other_b) = if j == i + 1 {
                    (a2, a1, ring[(j + 1) % n])
                } else {
                    (a1, a2, ring[j])
                };
                if super::cross(&shared, &other_a, &other_b) == 0.0 {
                    let dot = (other_a.x - shared.x) * (other_b.x - shared.x)
                        + (other_a.y - shared.y) * (other_b.y - shared.y);
                    if dot > 0.0 {
                        return Err(GeomError::SelfIntersecting(i, j));
                    }
                }
                continue;
            }
            let b1 = ring[j];
            let b2 = ring[(j + 1) % n];
            if b1.x.max(b2.x) < a_lo || b1.x.min(b2.x) > a_hi {
                continue;
            }
            if segments_intersect(&a1, &a2, &b1, &b2) {
                return Err(GeomError::SelfIntersecting(i, j));
            }
        }
    }
    Ok(())
}

fn ring_winding_contains(ring: &[Point], q: &Point) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let a = ring[i];
        let b = ring[j];
        if (a.y > q.y) != (b.y > q.y) {
            let x = a.x + (q.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if q.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn ring_boundary_distance(ring: &[Point], q: &Point) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| closest_on_segment(&ring[i], &ring[(i + 1) % n], q).distance(q))
        .fold(f64::INFINITY, f64::min)
}

impl Polygon {
    /// Validates and orients the rings. A repeated closing vertex is accepted
    /// and stripped.
    pub fn new(exterior: Vec<Point>, holes: Vec<Vec<Point>>) -> Result<Self, GeomError> {
        let mut exterior = normalize_ring(exterior)?;
        if ring_signed_area(&exterior) < 0.0 {
            exterior.reverse();
        }
        let mut out_holes = Vec::with_capacity(holes.len());
        for (k, hole) in holes.into_iter().enumerate() {
            let mut hole = normalize_ring(hole)?;
            if ring_signed_area(&hole) > 0.0 {
                hole.reverse();
            }
            let inside = hole.iter().all(|p| {
                ring_winding_contains(&exterior, p) || ring_boundary_distance(&exterior, p) <= 1e-9
            });
            if !inside {
                return Err(GeomError::HoleOutside(k));
            }
            out_holes.push(hole);
        }
        Ok(Self {
            exterior,
            holes: out_holes,
        })
    }

    pub fn from_ring(exterior: Vec<Point>) -> Result<Self, GeomError> {
        Self::new(exterior, Vec::new())
    }

    /// Axis-aligned rectangle; corners in any order.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeomError> {
        Self::from_ring(vec![
            Point::new(x0.min(x1), y0.min(y1)),
            Point::new(x0.max(x1), y0.min(y1)),
            Point::new(x0.max(x1), y0.max(y1)),
            Point::new(x0.min(x1), y0.max(y1)),
        ])
    }

    pub fn exterior(&self) -> &[Point] {
        &self.exterior
    }

    pub fn holes(&self) -> &[Vec<Point>] {
        &self.holes
    }

    pub fn rings(&self) -> impl Iterator<Item = &[Point]> {
        std::iter::once(self.exterior.as_slice()).chain(self.holes.iter().map(|h| h.as_slice()))
    }

    pub fn vertex_count(&self) -> usize {
        self.rings().map(|r| r.len()).sum()
    }

    pub fn area(&self) -> f64 {
        ring_signed_area(&self.exterior) + self.holes.iter().map(|h| ring_signed_area(h)).sum::<f64>()
    }

    pub fn perimeter(&self) -> f64 {
        self.rings()
            .map(|r| {
                let n = r.len();
                (0..n).map(|i| r[i].distance(&r[(i + 1) % n])).sum::<f64>()
            })
            .sum()
    }

    /// Area-weighted centroid.
    pub fn centroid(&self) -> Point {
        let o = self.exterior[0];
        let mut a_sum = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for ring in self.rings() {
            let n = ring.len();
            for i in 0..n {
                let p = ring[i].translate(-o.x, -o.y);
                let q = ring[(i + 1) % n].translate(-o.x, -o.y);
                let c = p.x * q.y - q.x * p.y;
                a_sum += c;
                cx += (p.x + q.x) * c;
                cy += (p.y + q.y) * c;
            }
        }
        let area = a_sum / 2.0;
        Point::new(o.x + cx / (6.0 * area), o.y + cy / (6.0 * area))
    }

    pub fn bbox(&self) -> BBox {
        BBox::of_points(&self.exterior).expect("validated ring is non-empty")
    }

    /// Strict interior test (points on the boundary may go either way).
    pub fn contains(&self, q: &Point) -> bool {
        ring_winding_contains(&self.exterior, q)
            && !self.holes.iter().any(|h| ring_winding_contains(h, q))
    }

    /// Inside, or within `tol` of any ring.
    pub fn covers(&self, q: &Point, tol: f64) -> bool {
        self.contains(q) || self.boundary_distance(q) <= tol
    }

    /// Distance from `q` to the nearest ring (exterior or hole).
    pub fn boundary_distance(&self, q: &Point) -> f64 {
        self.rings()
            .map(|r| ring_boundary_distance(r, q))
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from `q` to the polygon area: zero inside.
    pub fn distance_to(&self, q: &Point) -> f64 {
        if self.contains(q) {
            0.0
        } else {
            self.boundary_distance(q)
        }
    }

    /// Closest point on the exterior outline. Ties resolve to the lowest
    /// segment index.
    pub fn nearest_point_on_ring(&self, q: &Point) -> Point {
        let ring = &self.exterior;
        let n = ring.len();
        let mut best = ring[0];
        let mut best_d = f64::INFINITY;
        for i in 0..n {
            let c = closest_on_segment(&ring[i], &ring[(i + 1) % n], q);
            let d = c.distance_sq(q);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        best
    }

    /// Exterior segments as `(start, end)` pairs in ring order.
    pub fn exterior_segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.exterior.len();
        (0..n).map(move |i| (self.exterior[i], self.exterior[(i + 1) % n]))
    }

    pub fn all_segments(&self) -> Vec<(Point, Point)> {
        let mut out = Vec::with_capacity(self.vertex_count());
        for r in self.rings() {
            let n = r.len();
            for i in 0..n {
                out.push((r[i], r[(i + 1) % n]));
            }
        }
        out
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Polygon {
        let mv = |r: &Vec<Point>| r.iter().map(|p| p.translate(dx, dy)).collect::<Vec<_>>();
        Polygon {
            exterior: mv(&self.exterior),
            holes: self.holes.iter().map(mv).collect(),
        }
    }

    /// Douglas-Peucker on every ring. Holes that collapse are dropped; if the
    /// simplified polygon fails validation the original is returned.
    pub fn simplify(&self, tolerance: f64) -> Polygon {
        if tolerance <= 0.0 {
            return self.clone();
        }
        let exterior = simplify_ring(&self.exterior, tolerance);
        let holes: Vec<Vec<Point>> = self
            .holes
            .iter()
            .map(|h| simplify_ring(h, tolerance))
            .filter(|h| h.len() >= 3 && ring_signed_area(h) != 0.0)
            .collect();
        match Polygon::new(exterior, holes) {
            Ok(p) if p.area() > 0.0 => p,
            _ => self.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sq() -> Polygon {
        Polygon::rect(0.0, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn unit_square_area_and_centroid() {
        assert_eq!(polygon_area(&sq()), 1.0);
        assert_eq!(sq().centroid(), Point::new(0.5, 0.5));
    }

    #[test]
    fn square_with_hole() {
        let hole = vec![
            Point::new(0.25, 0.25),
            Point::new(0.75, 0.25),
            Point::new(0.75, 0.75),
            Point::new(0.25, 0.75),
        ];
        let p = Polygon::new(sq().exterior().to_vec(), vec![hole]).unwrap();
        assert!((p.area() - 0.75).abs() < 1e-15);
        assert!(!p.contains(&Point::new(0.5, 0.5)));
        assert!(p.contains(&Point::new(0.1, 0.5)));
    }

    #[test]
    fn degenerate_rings_rejected() {
        let two = vec![Point::new(0., 0.), Point::new(1., 0.), Point::new(0., 0.)];
        assert_eq!(Polygon::from_ring(two), Err(GeomError::TooFewVertices(2)));
        let line = vec![Point::new(0., 0.), Point::new(1., 0.), Point::new(2., 0.)];
        assert_eq!(Polygon::from_ring(line), Err(GeomError::ZeroArea));
        let bowtie = vec![
            Point::new(0., 0.),
            Point::new(2., 2.),
            Point::new(2., 0.),
            Point::new(0., 1.),
        ];
        assert!(matches!(
            Polygon::from_ring(bowtie),
            Err(GeomError::SelfIntersecting(..))
        ));
        let nan = vec![Point::new(f64::NAN, 0.), Point::new(1., 0.), Point::new(0., 1.)];
        assert_eq!(Polygon::from_ring(nan), Err(GeomError::NonFinite));
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let cw = vec![
            Point::new(0., 0.),
            Point::new(0., 1.),
            Point::new(1., 1.),
            Point::new(1., 0.),
        ];
        let p = Polygon::from_ring(cw).unwrap();
        assert!(ring_signed_area(p.exterior()) > 0.0);
    }

    #[test]
    fn hole_outside_rejected() {
        let hole = vec![Point::new(2., 2.), Point::new(3., 2.), Point::new(3., 3.)];
        assert_eq!(
            Polygon::new(sq().exterior().to_vec(), vec![hole]),
            Err(GeomError::HoleOutside(0))
        );
    }

    #[test]
    fn l_shape_centroid_matches_decomposition() {
        // squares [0,1]x[0,1] and [1,2]x[0,1] plus [0,1]x[1,2]
        let l = Polygon::from_ring(vec![
            Point::new(0., 0.),
            Point::new(2., 0.),
            Point::new(2., 1.),
            Point::new(1., 1.),
            Point::new(1., 2.),
            Point::new(0., 2.),
        ])
        .unwrap();
        let parts = [(0.5, 0.5), (1.5, 0.5), (0.5, 1.5)];
        let ex = parts.iter().map(|p| p.0).sum::<f64>() / 3.0;
        let ey = parts.iter().map(|p| p.1).sum::<f64>() / 3.0;
        let c = l.centroid();
        assert!((c.x - ex).abs() < 1e-12 && (c.y - ey).abs() < 1e-12);
        assert_eq!(l.area(), 3.0);
    }

    #[test]
    fn nearest_point_ties_take_lowest_segment() {
        let q = sq().nearest_point_on_ring(&Point::new(0.5, 0.5));
        assert_eq!(q, Point::new(0.5, 0.0));
        let on = Point::new(1.0, 0.3);
        assert_eq!(sq().nearest_point_on_ring(&on), on);
    }

    /// Random star-shaped polygon: angles sorted, radii random.
    pub(crate) fn star(n: usize, radii: &[f64], cx: f64, cy: f64) -> Vec<Point> {
        (0..n)
            .map(|i| {
                let t = i as f64 / n as f64 * std::f64::consts::TAU;
                Point::new(cx + radii[i] * t.cos(), cy + radii[i] * t.sin())
            })
            .collect()
    }

    fn fan_area(ring: &[Point], hub: Point) -> f64 {
        // sum of signed triangle areas about an arbitrary hub
        let n = ring.len();
        (0..n)
            .map(|i| super::super::cross(&hub, &ring[i], &ring[(i + 1) % n]) / 2.0)
            .sum()
    }

    proptest! {
        #[test]
        fn area_matches_fan_triangulation(radii in proptest::collection::vec(0.5f64..5.0, 12),
                                          cx in -100.0f64..100.0, cy in -100.0f64..100.0) {
            let ring = star(12, &radii, cx, cy);
            let p = Polygon::from_ring(ring.clone()).unwrap();
            let oracle = fan_area(&ring, Point::new(cx, cy));
            prop_assert!((p.area() - oracle).abs() < 1e-9);
        }

        #[test]
        fn area_centroid_invariant_under_rotation_and_translation(
            radii in proptest::collection::vec(0.5f64..5.0, 9),
            shift in 0usize..9, dx in -1e3f64..1e3, dy in -1e3f64..1e3) {
            let ring = star(9, &radii, 0.0, 0.0);
            let mut rotated = ring.clone();
            rotated.rotate_left(shift);
            let a = Polygon::from_ring(ring).unwrap();
            let b = Polygon::from_ring(rotated).unwrap();
            prop_assert!((a.area() - b.area()).abs() < 1e-9);
            let (ca, cb) = (a.centroid(), b.centroid());
            prop_assert!(ca.distance(&cb) < 1e-9);
            let t = a.translate(dx, dy);
            prop_assert!((t.area() - a.area()).abs() < 1e-7);
            prop_assert!(t.centroid().distance(&ca.translate(dx, dy)) < 1e-8);
        }

        #[test]
        fn nearest_point_matches_segment_oracle(radii in proptest::collection::vec(0.5f64..5.0, 20),
                                                qx in -8.0f64..8.0, qy in -8.0f64..8.0) {
            let ring = star(20, &radii, 0.0, 0.0);
            let p = Polygon::from_ring(ring.clone()).unwrap();
            let q = Point::new(qx, qy);
            let got = p.nearest_point_on_ring(&q).distance(&q);
            let mut best = f64::INFINITY;
            for i in 0..ring.len() {
                let a = ring[i];
                let b = ring[(i + 1) % ring.len()];
                // independent projection: clamp parameter on the segment
                let (vx, vy) = (b.x - a.x, b.y - a.y);
                let t = (((q.x - a.x) * vx + (q.y - a.y) * vy) / (vx * vx + vy * vy)).clamp(0.0, 1.0);
                let d = ((a.x + t * vx - q.x).powi(2) + (a.y + t * vy - q.y).powi(2)).sqrt();
                best = best.min(d);
            }
            prop_assert!((got - best).abs() < 1e-9);
        }
    }
}
