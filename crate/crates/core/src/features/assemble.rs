use rayon::prelude::*;

use crate::geom::{BBox, Point, Polygon, Polyline, SpatialIndex};

use super::poi::PoiLayer;
use super::registry::slug;
use super::street::{nearest_road_distance, road_index, street_adjacency_indexed};
use super::{
    assign_blocks, city_tier_assign, distance_to_center, functional_centers, kde_surface, morphology_features,
    neighbor_features, AdminArea, FeatureError, FeatureKind, FeatureMatrix, FeatureRegistry, GridSpec, Poi,
    POI_CATEGORIES,
};

#[derive(Debug, Clone, PartialEq)]
pub struct BuildingInput {
    pub id: String,
    pub polygon: Polygon,
    /// Height prediction, needed only by the function subset.
    pub pred_height: Option<f64>,
}

/// City-wide context layers, shared read-only by every row.
#[derive(Debug, Clone, Default)]
pub struct FeatureContext {
    pub blocks: Vec<Polygon>,
    pub roads: Vec<Polyline>,
    pub pois: Vec<Poi>,
    pub admins: Vec<AdminArea>,
    pub climate_zone: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureParams {
    pub neighbor_radius: f64,
    pub poi_radius: f64,
    pub kde_bandwidth: f64,
    pub kde_cell: f64,
    pub alpha: f64,
    pub setback: f64,
    pub floor_height: f64,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self {
            neighbor_radius: 100.0,
            poi_radius: 300.0,
            kde_bandwidth: 300.0,
            kde_cell: 50.0,
            alpha: 0.01,
            setback: 100.0,
            floor_height: 3.0,
        }
    }
}

enum Value {
    Num(f64),
    Missing,
    Level(String),
}

fn known_names() -> Vec<String> {
    let mut names: Vec<String> = FeatureRegistry::default_function().names();
    names.retain(|n| !n.starts_with("poi_count_") && !n.starts_with("poi_kde_"));
    for cat in POI_CATEGORIES {
        names.push(format!("poi_count_{}", slug(cat)));
        names.push(format!("poi_kde_{}", slug(cat)));
    }
    names
}

/// One row per building in registry order. Missing context (no neighbours,
/// no block, no roads, no centers, no height) is masked, never zeroed.
pub fn assemble_feature_matrix(
    buildings: &[BuildingInput],
    ctx: &FeatureContext,
    registry: &FeatureRegistry,
    params: &FeatureParams,
) -> Result<FeatureMatrix, FeatureError> {
    let known = known_names();
    for f in &registry.features {
        if !known.contains(&f.name) {
            return Err(FeatureError::UnknownFeature(f.name.clone()));
        }
    }
    let mut matrix = FeatureMatrix::empty(registry);
    if buildings.is_empty() {
        return Ok(matrix);
    }

    let morph: Vec<_> = buildings.par_iter().map(|b| morphology_features(&b.polygon)).collect();
    let centroids: Vec<Point> = morph.iter().map(|m| m.centroid).collect();
    let centroid_index = SpatialIndex::from_points(&centroids);

    let blocks = assign_blocks(&centroids, &ctx.blocks);
    let roads = road_index(&ctx.roads);
    let mut adjacent = vec![false; buildings.len()];
    for members in blocks.members.iter().filter(|m| !m.is_empty()) {
        let polys: Vec<&Polygon> = members.iter().map(|&i| &buildings[i].polygon).collect();
        let adj = street_adjacency_indexed(&polys, &ctx.roads, &roads, params.alpha, params.setback);
        for (&i, a) in members.iter().zip(adj) {
            adjacent[i] = a;
        }
    }
    for i in (0..buildings.len()).filter(|&i| blocks.block_of[i].is_none()) {
        adjacent[i] = street_adjacency_indexed(&[&buildings[i].polygon], &ctx.roads, &roads, params.alpha, params.setback)[0];
    }

    let poi_layer = PoiLayer::new(&ctx.pois)?;
    let poi_points: Vec<Point> = ctx.pois.iter().map(|p| p.point).collect();
    let poi_index = SpatialIndex::from_points(&poi_points);
    let h = params.kde_bandwidth;
    let centers = if poi_points.is_empty() {
        Vec::new()
    } else {
        let mut extent: Vec<Point> = poi_points.clone();
        extent.extend_from_slice(&centroids);
        let grid = GridSpec::covering(&extent, 3.0 * h, params.kde_cell).ok_or(FeatureError::EmptyPoints)?;
        functional_centers(&kde_surface(&poi_points, h, grid)?).unwrap_or_default()
    };
    let norm_all = 1.0 / (poi_points.len().max(1) as f64 * h * h * 2.0 * std::f64::consts::PI);

    let known_ref = &known;
    let rows: Vec<(Vec<Option<f64>>, Vec<String>)> = (0..buildings.len())
        .into_par_iter()
        .map(|i| {
            let b = &buildings[i];
            let m = &morph[i];
            let c = centroids[i];
            let nb = neighbor_features(i, &centroids, &centroid_index, params.neighbor_radius).expect("radius validated");
            let members = blocks.block_members(i);
            let block_poly = blocks.block_of[i].map(|k| &ctx.blocks[k]);
            let member_area: f64 = members.iter().map(|&j| morph[j].area).sum();
            let poi = poi_layer.features(&c, params.poi_radius, h);
            let density_all = poi_index
                .query(&BBox::around(c, 10.0 * h))
                .into_iter()
                .map(|k| {
                    let (u, v) = ((c.x - poi_points[k].x) / h, (c.y - poi_points[k].y) / h);
                    (-0.5 * (u * u + v * v)).exp()
                })
                .sum::<f64>()
                * norm_all;
            let (tier, _) = city_tier_assign(&c, &ctx.admins);
            let opt = |v: Option<f64>| v.map_or(Value::Missing, Value::Num);

            let value = |name: &str| -> Value {
                match name {
                    "area" => Value::Num(m.area),
                    "perimeter" => Value::Num(m.perimeter),
                    "vertex_count" => Value::Num(m.vertex_count),
                    "compactness" => Value::Num(m.compactness),
                    "mrr_length" => Value::Num(m.mrr_length),
                    "mrr_width" => Value::Num(m.mrr_width),
                    "orientation" => Value::Num(m.orientation),
                    "elongation" => Value::Num(m.elongation),
                    "nb_count" => Value::Num(nb.count as f64),
                    "nb_mean_dist" => opt(nb.mean_distance),
                    "nb_nearest_dist" => opt(nb.nearest_distance),
                    "block_area" => opt(block_poly.map(|p| p.area())),
                    "block_building_count" => Value::Num(members.len() as f64),
                    "block_coverage" => opt(block_poly.map(|p| member_area / p.area())),
                    "block_mean_area" => Value::Num(member_area / members.len() as f64),
                    "street_adjacent" => Value::Num(adjacent[i] as u8 as f64),
                    "dist_to_center" => opt(distance_to_center(&c, &centers)),
                    "dist_to_road" => opt(nearest_road_distance(&b.polygon, &ctx.roads, &roads)),
                    "poi_density_all" => Value::Num(density_all),
                    "city_tier" => Value::Level(tier.as_str().to_string()),
                    "climate_zone" => ctx.climate_zone.clone().map_or(Value::Missing, Value::Level),
                    "pred_height" => opt(b.pred_height),
                    "volume" => opt(b.pred_height.map(|hh| hh * m.area)),
                    "est_floors" => opt(b.pred_height.map(|hh| hh / params.floor_height)),
                    other => {
                        let k = known_ref.iter().position(|n| n == other).expect("validated name");
                        let cat = POI_CATEGORIES.iter().position(|c| other.ends_with(&slug(c))).unwrap_or(k);
                        if other.starts_with("poi_count_") {
                            Value::Num(poi.counts[cat] as f64)
                        } else {
                            Value::Num(poi.densities[cat])
                        }
                    }
                }
            };

            let mut flags = Vec::new();
            let row = registry
                .features
                .iter()
                .map(|f| match (value(&f.name), &f.kind) {
                    (Value::Missing, _) => None,
                    (Value::Num(v), _) => Some(v),
                    (Value::Level(l), FeatureKind::Categorical(levels)) => Some(match levels.iter().position(|x| *x == l) {
                        Some(code) => code as f64,
                        None => {
                            flags.push(format!("building {}: unknown {} level `{}`", b.id, f.name, l));
                            levels.len() as f64
                        }
                    }),
                    (Value::Level(_), FeatureKind::Numeric) => None,
                })
                .collect();
            (row, flags)
        })
        .collect();

    for (b, (row, flags)) in buildings.iter().zip(rows) {
        matrix.push_row(b.id.clone(), &row);
        matrix.flags.extend(flags);
    }
    Ok(matrix)
}
