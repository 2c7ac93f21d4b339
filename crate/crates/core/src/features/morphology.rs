use crate::geom::{convex_hull, Point, Polygon};

/// Minimum-area enclosing rectangle: `length ≥ width`, orientation of the
/// long side in degrees within [0, 180).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedRect {
    pub length: f64,
    pub width: f64,
    pub orientation_deg: f64,
}

/// Rotating calipers over the convex hull; the first hull edge reaching the
/// minimum area wins.
pub fn min_rotated_rect(p: &Polygon) -> RotatedRect {
    let hull = convex_hull(p.exterior());
    let n = hull.len();
    let mut best: Option<(f64, RotatedRect)> = None;
    for i in 0..n {
        let (a, b) = (hull[i], hull[(i + 1) % n]);
        let len = a.distance(&b);
        if len == 0.0 {
            continue;
        }
        let (ux, uy) = ((b.x - a.x) / len, (b.y - a.y) / len);
        let (mut lo_u, mut hi_u, mut lo_v, mut hi_v) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for q in &hull {
            let (dx, dy) = (q.x - a.x, q.y - a.y);
            let u = dx * ux + dy * uy;
            let v = -dx * uy + dy * ux;
            lo_u = lo_u.min(u);
            hi_u = hi_u.max(u);
            lo_v = lo_v.min(v);
            hi_v = hi_v.max(v);
        }
        let (du, dv) = (hi_u - lo_u, hi_v - lo_v);
        let area = du * dv;
        let angle = if du >= dv { uy.atan2(ux) } else { ux.atan2(-uy) };
        let rect = RotatedRect {
            length: du.max(dv),
            width: du.min(dv),
            orientation_deg: normalize_deg(angle.to_degrees()),
        };
        if best.as_ref().is_none_or(|(ba, _)| area < ba * (1.0 - 1e-12)) {
            best = Some((area, rect));
        }
    }
    best.map(|(_, r)| r).unwrap_or(RotatedRect {
        length: 0.0,
        width: 0.0,
        orientation_deg: 0.0,
    })
}

fn normalize_deg(d: f64) -> f64 {
    let r = d.rem_euclid(180.0);
    if r >= 180.0 - 1e-9 || r < 1e-9 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Morphology {
    pub area: f64,
    pub perimeter: f64,
    pub vertex_count: f64,
    pub compactness: f64,
    pub mrr_length: f64,
    pub mrr_width: f64,
    pub orientation: f64,
    pub elongation: f64,
    pub centroid: Point,
}

/// Shape descriptors of a rooftop. Compactness is 4πA/P².
pub fn morphology_features(b: &Polygon) -> Morphology {
    let area = b.area();
    let perimeter = b.perimeter();
    let r = min_rotated_rect(b);
    Morphology {
        area,
        perimeter,
        vertex_count: b.vertex_count() as f64,
        compactness: 4.0 * std::f64::consts::PI * area / (perimeter * perimeter),
        mrr_length: r.length,
        mrr_width: r.width,
        orientation: r.orientation_deg,
        elongation: r.length / r.width,
        centroid: b.centroid(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Buffer;
    use proptest::prelude::*;

    #[test]
    fn unit_square() {
        let m = morphology_features(&Polygon::rect(0., 0., 1., 1.).unwrap());
        assert_eq!(m.area, 1.0);
        assert_eq!(m.perimeter, 4.0);
        assert_eq!(m.vertex_count, 4.0);
        assert!((m.compactness - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn circle_is_compact() {
        let c = Point::new(3., 4.).buffer(1.0).unwrap();
        assert_eq!(c.vertex_count(), 64);
        assert!(morphology_features(&c).compactness >= 0.99);
    }

    #[test]
    fn long_rectangle() {
        let m = morphology_features(&Polygon::rect(0., 0., 10., 1.).unwrap());
        assert!((m.elongation - 10.0).abs() < 1e-12);
        assert_eq!(m.orientation, 0.0);
        let m = morphology_features(&Polygon::rect(0., 0., 1., 10.).unwrap());
        assert!((m.orientation - 90.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn rotated_rectangle_recovered(theta in 0.0f64..180.0, w in 1.0f64..5.0, extra in 0.5f64..20.0) {
            let l = w + extra;
            let (c, s) = (theta.to_radians().cos(), theta.to_radians().sin());
            let pts: Vec<Point> = [(0., 0.), (l, 0.), (l, w), (0., w)]
                .iter()
                .map(|&(x, y)| Point::new(x * c - y * s, x * s + y * c))
                .collect();
            let r = min_rotated_rect(&Polygon::from_ring(pts).unwrap());
            prop_assert!((r.length - l).abs() < 1e-9 && (r.width - w).abs() < 1e-9);
            let diff = (r.orientation_deg - theta).rem_euclid(180.0);
            prop_assert!(diff < 1e-6 || diff > 180.0 - 1e-6, "{} vs {}", r.orientation_deg, theta);
        }
    }
}
