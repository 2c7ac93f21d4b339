//! Spherical azimuthal equidistant projection about a city origin; keeps
//! buffer and setback distances metre-true near the city.

use crate::geom::Point;

pub const EARTH_RADIUS: f64 = 6_371_008.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aeqd {
    pub lon0: f64,
    pub lat0: f64,
}

impl Aeqd {
    pub fn new(lon0: f64, lat0: f64) -> Self {
        Self { lon0, lat0 }
    }

    /// WGS84 degrees → local metres.
    pub fn forward(&self, lon: f64, lat: f64) -> Point {
        let (p0, p) = (self.lat0.to_radians(), lat.to_radians());
        let dl = (lon - self.lon0).to_radians();
        let xp = p.cos() * dl.sin();
        let yp = p0.cos() * p.sin() - p0.sin() * p.cos() * dl.cos();
        let rho = xp.hypot(yp);
        if rho == 0.0 {
            return Point::new(0.0, 0.0);
        }
        let cos_c = p0.sin() * p.sin() + p0.cos() * p.cos() * dl.cos();
        let c = rho.atan2(cos_c);
        Point::new(EARTH_RADIUS * c * xp / rho, EARTH_RADIUS * c * yp / rho)
    }

    /// Local metres → (lon, lat) degrees.
    pub fn inverse(&self, q: &Point) -> (f64, f64) {
        let rho = q.x.hypot(q.y);
        if rho == 0.0 {
            return (self.lon0, self.lat0);
        }
        let p0 = self.lat0.to_radians();
        let c = rho / EARTH_RADIUS;
        let lat = (c.cos() * p0.sin() + q.y * c.sin() * p0.cos() / rho).clamp(-1.0, 1.0).asin();
        let lon = self.lon0.to_radians() + (q.x * c.sin()).atan2(rho * p0.cos() * c.cos() - q.y * p0.sin() * c.sin());
        (lon.to_degrees(), lat.to_degrees())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distances_from_origin_are_true() {
        let p = Aeqd::new(116.4, 39.9);
        assert_eq!(p.forward(116.4, 39.9), Point::new(0.0, 0.0));
        // one degree of latitude along the meridian
        let q = p.forward(116.4, 40.9);
        assert!(q.x.abs() < 1e-6);
        assert!((q.y - EARTH_RADIUS * 1f64.to_radians()).abs() < 1e-6);
        let e = p.forward(116.41, 39.9);
        assert!(e.x > 0.0);
    }

    proptest! {
        #[test]
        fn round_trip(lon0 in -170.0f64..170.0, lat0 in -70.0f64..70.0, dx in -0.2f64..0.2, dy in -0.2f64..0.2) {
            let p = Aeqd::new(lon0, lat0);
            let (lon, lat) = p.inverse(&p.forward(lon0 + dx, lat0 + dy));
            prop_assert!((lon - lon0 - dx).abs() < 1e-9 && (lat - lat0 - dy).abs() < 1e-9);
        }
    }
}
