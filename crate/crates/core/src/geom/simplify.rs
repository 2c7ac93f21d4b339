//! Douglas-Peucker simplification for open chains and closed rings.

use super::{segment_distance, Point};

fn keep_inner(line: &[Point], tol: f64, offset: usize, keep: &mut Vec<usize>) {
    if line.len() <= 2 {
        return;
    }
    let first = line[0];
    let last = line[line.len() - 1];
    let mut worst = (0usize, -1.0f64);
    for (i, p) in line.iter().enumerate().take(line.len() - 1).skip(1) {
        let d = segment_distance(&first, &last, p);
        if d > worst.1 {
            worst = (i, d);
        }
    }
    if worst.1 > tol {
        keep_inner(&line[..=worst.0], tol, offset, keep);
        keep.push(offset + worst.0);
        keep_inner(&line[worst.0..], tol, offset + worst.0, keep);
    }
}

/// Douglas-Peucker on an open chain. Endpoints are always kept; a tolerance
/// of zero returns the input unchanged.
pub fn simplify_dp(line: &[Point], tolerance: f64) -> Vec<Point> {
    if line.len() <= 2 || tolerance <= 0.0 {
        return line.to_vec();
    }
    let mut keep = vec![0];
    keep_inner(line, tolerance, 0, &mut keep);
    keep.push(line.len() - 1);
    keep.into_iter().map(|i| line[i]).collect()
}

/// Douglas-Peucker on an open ring (closing vertex implied).
///
/// The ring is cut at vertex 0 and at the vertex farthest from it; each half
/// is simplified independently. At least three vertices always survive.
pub fn simplify_ring(ring: &[Point], tolerance: f64) -> Vec<Point> {
    let n = ring.len();
    if n <= 3 || tolerance <= 0.0 {
        return ring.to_vec();
    }
    let origin = ring[0];
    let mut far = 1;
    let mut far_d = -1.0;
    for (i, p) in ring.iter().enumerate().skip(1) {
        let d = p.distance_sq(&origin);
        if d > far_d {
            far_d = d;
            far = i;
        }
    }
    let first_half = simplify_dp(&ring[..=far], tolerance);
    let mut second: Vec<Point> = ring[far..].to_vec();
    second.push(origin);
    let second_half = simplify_dp(&second, tolerance);

    let mut out = first_half;
    out.extend_from_slice(&second_half[1..second_half.len() - 1]);
    if out.len() < 3 {
        // both halves collapsed to their anchors: keep the vertex farthest
        // from the anchor chord
        let (a, b) = (ring[0], ring[far]);
        let mut best = (0usize, -1.0f64);
        for (i, p) in ring.iter().enumerate() {
            if i == 0 || i == far {
                continue;
            }
            let d = segment_distance(&a, &b, p);
            if d > best.1 {
                best = (i, d);
            }
        }
        out = if best.0 < far {
            vec![a, ring[best.0], b]
        } else {
            vec![a, b, ring[best.0]]
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn collinear_middle_point_removed() {
        let line = [Point::new(0., 0.), Point::new(1., 0.), Point::new(2., 0.)];
        assert_eq!(
            simplify_dp(&line, 0.01),
            vec![Point::new(0., 0.), Point::new(2., 0.)]
        );
    }

    #[test]
    fn square_ring_unchanged() {
        let sq = [
            Point::new(0., 0.),
            Point::new(1., 0.),
            Point::new(1., 1.),
            Point::new(0., 1.),
        ];
        assert_eq!(simplify_ring(&sq, 0.01), sq.to_vec());
    }

    #[test]
    fn zero_tolerance_is_identity() {
        let line: Vec<Point> = (0..10).map(|i| Point::new(i as f64, 0.0)).collect();
        assert_eq!(simplify_dp(&line, 0.0), line);
    }

    #[test]
    fn ring_keeps_three_vertices() {
        // nearly flat diamond collapses to a triangle, never below
        let ring = [
            Point::new(0., 0.),
            Point::new(5., 0.01),
            Point::new(10., 0.),
            Point::new(5., -0.02),
        ];
        assert_eq!(simplify_ring(&ring, 1.0).len(), 3);
    }

    fn hausdorff(a: &[Point], b: &[Point]) -> f64 {
        // brute force: every vertex of one chain against every segment of the other
        let directed = |from: &[Point], to: &[Point]| {
            from.iter()
                .map(|p| {
                    to.windows(2)
                        .map(|w| segment_distance(&w[0], &w[1], p))
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        };
        directed(a, b).max(directed(b, a))
    }

    #[test]
    fn sine_polyline_hausdorff_within_tolerance() {
        let line: Vec<Point> = (0..200)
            .map(|i| {
                let x = i as f64 * 0.05;
                Point::new(x, x.sin())
            })
            .collect();
        let s = simplify_dp(&line, 0.05);
        assert!(s.len() < line.len());
        assert_eq!(s.first(), line.first());
        assert_eq!(s.last(), line.last());
        assert!(hausdorff(&line, &s) <= 0.05 + 1e-12);
    }

    proptest! {
        #[test]
        fn simplify_is_idempotent(ys in proptest::collection::vec(-3.0f64..3.0, 3..60), tol in 0.0f64..1.0) {
            let line: Vec<Point> = ys.iter().enumerate().map(|(i, &y)| Point::new(i as f64, y)).collect();
            let once = simplify_dp(&line, tol);
            prop_assert_eq!(simplify_dp(&once, tol), once);
        }

        #[test]
        fn ring_simplify_is_idempotent(radii in proptest::collection::vec(1.0f64..3.0, 4..40), tol in 0.0f64..1.0) {
            let n = radii.len();
            let ring: Vec<Point> = (0..n).map(|i| {
                let t = i as f64 / n as f64 * std::f64::consts::TAU;
                Point::new(radii[i] * t.cos(), radii[i] * t.sin())
            }).collect();
            let once = simplify_ring(&ring, tol);
            prop_assert!(once.len() >= 3);
            prop_assert_eq!(simplify_ring(&once, tol), once);
        }

        #[test]
        fn dropped_vertices_within_tolerance(ys in proptest::collection::vec(-3.0f64..3.0, 3..60), tol in 0.01f64..1.0) {
            let line: Vec<Point> = ys.iter().enumerate().map(|(i, &y)| Point::new(i as f64, y)).collect();
            let s = simplify_dp(&line, tol);
            for p in &line {
                let d = s.windows(2).map(|w| segment_distance(&w[0], &w[1], p)).fold(f64::INFINITY, f64::min);
                prop_assert!(d <= tol + 1e-12);
            }
        }
    }
}
