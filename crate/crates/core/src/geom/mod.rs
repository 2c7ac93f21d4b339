//! Planar geometry shared by every pipeline stage.
//!
//! All coordinates are meters in a local projected frame (see
//! [`crate::pipeline::projection`]). Rings are stored open: the closing vertex
//! is implied and never repeated.

mod alpha;
mod buffer;
mod index;
mod polygon;
mod simplify;
mod view;

pub use alpha::{alpha_shape, convex_hull};
pub use buffer::{chord_error, Buffer, SEGMENTS_PER_QUADRANT};
pub(crate) use buffer::union_single;
pub use index::SpatialIndex;
pub use polygon::{polygon_area, ring_signed_area, Polygon};
pub use simplify::{simplify_dp, simplify_ring};
pub use view::{select_view_side, ViewSide};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("ring has {0} distinct vertices, at least 3 are required")]
    TooFewVertices(usize),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("ring has zero area")]
    ZeroArea,
    #[error("ring is self-intersecting between segments {0} and {1}")]
    SelfIntersecting(usize, usize),
    #[error("hole {0} is not inside the exterior ring")]
    HoleOutside(usize),
    #[error("polyline needs at least 2 vertices, got {0}")]
    ShortPolyline(usize),
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("alpha must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("points are collinear or fewer than 3 distinct points were given")]
    Collinear,
    #[error("boolean operation produced no usable polygon")]
    EmptyResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Point {
        Point::new(self.x + dx, self.y + dy)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self {
            min_x: min_x.min(max_x),
            min_y: min_y.min(max_y),
            max_x: max_x.max(min_x),
            max_y: max_y.max(min_y),
        }
    }

    pub fn around(p: Point, radius: f64) -> Self {
        Self::new(p.x - radius, p.y - radius, p.x + radius, p.y + radius)
    }

    pub fn of_points<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut b = BBox::new(first.x, first.y, first.x, first.y);
        for p in it {
            b.min_x = b.min_x.min(p.x);
            b.min_y = b.min_y.min(p.y);
            b.max_x = b.max_x.max(p.x);
            b.max_y = b.max_y.max(p.y);
        }
        Some(b)
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn intersects(&self, other: &BBox) -> bool {
        self.min_x <= other.max_x
            && other.min_x <= self.max_x
            && self.min_y <= other.max_y
            && other.min_y <= self.max_y
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    pub fn inflate(&self, by: f64) -> BBox {
        BBox::new(
            self.min_x - by,
            self.min_y - by,
            self.max_x + by,
            self.max_y + by,
        )
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox::new(
            self.min_x.min(other.min_x),
            self.min_y.min(other.min_y),
            self.max_x.max(other.max_x),
            self.max_y.max(other.max_y),
        )
    }
}

/// An open chain of at least two vertices (roads).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    vertices: Vec<Point>,
}

impl Polyline {
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeomError> {
        if vertices.len() < 2 {
            return Err(GeomError::ShortPolyline(vertices.len()));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| a.distance(&b)).sum()
    }

    pub fn bbox(&self) -> BBox {
        BBox::of_points(&self.vertices).expect("polyline has vertices")
    }

    pub fn distance_to(&self, q: &Point) -> f64 {
        self.segments()
            .map(|(a, b)| closest_on_segment(&a, &b, q).distance(q))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn simplify(&self, tolerance: f64) -> Polyline {
        Polyline {
            vertices: simplify_dp(&self.vertices, tolerance),
        }
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Polyline {
        Polyline {
            vertices: self.vertices.iter().map(|p| p.translate(dx, dy)).collect(),
        }
    }
}

pub(crate) fn cross(o: &Point, a: &Point, b: &Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Closest point to `q` on the closed segment `a`-`b`.
pub fn closest_on_segment(a: &Point, b: &Point, q: &Point) -> Point {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let len_sq = dx * dx + dy * dy;
    if len_sq == 0.0 {
        return *a;
    }
    let t = ((q.x - a.x) * dx + (q.y - a.y) * dy) / len_sq;
    if t <= 0.0 {
        *a
    } else if t >= 1.0 {
        *b
    } else {
        Point::new(a.x + t * dx, a.y + t * dy)
    }
}

pub fn segment_distance(a: &Point, b: &Point, q: &Point) -> f64 {
    closest_on_segment(a, b, q).distance(q)
}

fn on_segment(a: &Point, b: &Point, p: &Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(p1: &Point, p2: &Point, q1: &Point, q2: &Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Minimum distance between two closed segments.
pub fn segment_segment_distance(p1: &Point, p2: &Point, q1: &Point, q2: &Point) -> f64 {
    if segments_intersect(p1, p2, q1, q2) {
        return 0.0;
    }
    segment_distance(q1, q2, p1)
        .min(segment_distance(q1, q2, p2))
        .min(segment_distance(p1, p2, q1))
        .min(segment_distance(p1, p2, q2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polyline_needs_two_vertices() {
        assert_eq!(
            Polyline::new(vec![Point::new(0.0, 0.0)]),
            Err(GeomError::ShortPolyline(1))
        );
    }

    #[test]
    fn segment_intersection_cases() {
        let p = |x, y| Point::new(x, y);
        assert!(segments_intersect(&p(0., 0.), &p(2., 2.), &p(0., 2.), &p(2., 0.)));
        assert!(segments_intersect(&p(0., 0.), &p(1., 0.), &p(1., 0.), &p(1., 1.)));
        assert!(!segments_intersect(&p(0., 0.), &p(1., 0.), &p(0., 1.), &p(1., 1.)));
        assert!(segments_intersect(&p(0., 0.), &p(2., 0.), &p(1., 0.), &p(3., 0.)));
        assert_eq!(
            segment_segment_distance(&p(0., 0.), &p(1., 0.), &p(0., 1.), &p(1., 1.)),
            1.0
        );
    }

    #[test]
    fn bbox_inflate_and_intersect() {
        let a = BBox::new(0., 0., 1., 1.);
        let b = BBox::new(1.5, 0., 2., 1.);
        assert!(!a.intersects(&b));
        assert!(a.inflate(0.5).intersects(&b));
    }
}
