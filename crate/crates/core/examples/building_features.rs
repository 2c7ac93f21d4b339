//! Feature matrix for the height model on a small synthetic city.

use geoattrib::features::{assemble_feature_matrix, BuildingInput, FeatureContext, FeatureParams, FeatureRegistry};
use geoattrib::pipeline::{synth_city, CityParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let city = synth_city(1, &CityParams { n_buildings: 200, ..CityParams::default() })?;
    let inputs: Vec<BuildingInput> = city
        .buildings
        .iter()
        .map(|b| BuildingInput { id: b.id.clone(), polygon: b.polygon.clone(), pred_height: None })
        .collect();
    let ctx = FeatureContext {
        blocks: city.blocks.clone(),
        roads: city.roads.clone(),
        pois: city.pois.clone(),
        admins: city.admins.clone(),
        climate_zone: Some("Cfa".into()),
    };
    let registry = FeatureRegistry::default_height();
    let m = assemble_feature_matrix(&inputs, &ctx, &registry, &FeatureParams::default())?;
    println!("{} buildings x {} features", m.n_rows(), m.n_cols());
    for (j, name) in m.names.iter().enumerate() {
        println!("{name:>24} = {}", m.get(0, j).map_or("masked".into(), |v| format!("{v:.3}")));
    }
    Ok(())
}
