//! Function labels from AOI plots, street-view quality and construction age
//! for the buildings of a synthetic city.

use geoattrib::indicative::{assign_age, assign_function_labels, quality_latest, SviLayer, QUALITY_BUFFER};
use geoattrib::pipeline::{synth_city, CityParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let city = synth_city(2, &CityParams { n_buildings: 300, ..CityParams::default() })?;
    let centroids: Vec<_> = city.buildings.iter().map(|b| b.polygon.centroid()).collect();
    let labels = assign_function_labels(&centroids, &city.aois);
    let layer = SviLayer::new(city.svi.clone());
    let (mut labeled, mut correct_age) = (0, 0);
    for (i, b) in city.buildings.iter().enumerate() {
        labeled += labels[i].is_some() as usize;
        correct_age += (assign_age(&centroids[i], &city.stack)? == b.age) as usize;
    }
    println!("AOI labels for {labeled}/{} buildings", city.buildings.len());
    println!("age recovered for {correct_age}/{} buildings", city.buildings.len());
    for (b, c) in city.buildings.iter().zip(&centroids).take(5) {
        let q = quality_latest(&layer.in_buffer(c, QUALITY_BUFFER));
        println!("{}: year {:?}, Q {:?}, types {:?}", b.id, q.year, q.total, q.types);
    }
    Ok(())
}
