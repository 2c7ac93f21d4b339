//! Footprint geometry: area, alpha shape of a building group, and which side
//! of a street-view capture a building falls on.

use geoattrib::geom::{alpha_shape, select_view_side, Point, Polygon};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let b = Polygon::rect(0.0, 0.0, 20.0, 12.0)?;
    println!("area {} m², perimeter {} m, centroid {:?}", b.area(), b.perimeter(), b.centroid());

    let pts: Vec<Point> = (0..5).flat_map(|i| (0..5).map(move |j| Point::new(i as f64 * 10.0, j as f64 * 10.0))).collect();
    let hull = alpha_shape(&pts, 0.01)?;
    println!("alpha shape of a 5x5 lattice: {} vertices, area {}", hull.exterior().len(), hull.area());

    // north-heading capture point west of the building
    let svi = Point::new(-15.0, 6.0);
    let obs = b.nearest_point_on_ring(&svi);
    println!("observation point {obs:?}, side {:?}", select_view_side(0.0, &svi, &obs));
    Ok(())
}
