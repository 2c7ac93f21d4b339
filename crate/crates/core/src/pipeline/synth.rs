//! Seeded synthetic cities with known ground truth, written in the
//! pipeline's input formats.
//!
//! Layout: a square of 30 m cells; every fifth cell row/column is a road, the
//! 4×4 cells between roads form a block, and each building sits inside its
//! own cell (so footprints never overlap and each impervious-stack cell holds
//! at most one centroid). Tiers are vertical strips west to east; the last
//! strip has no administrative polygon (non-urban).

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use super::{
    features_to_string, write_atomic, write_pois, write_svi, Aeqd, Geometry, PipelineConfig, PipelineError,
    VectorFeature,
};
use crate::features::{AdminArea, CityTier, Poi, POI_CATEGORIES};
use crate::geom::{BBox, Point, Polygon, Polyline, SpatialIndex};
use crate::grid::AsciiGrid;
use crate::indicative::{
    quality_latest, AgeClass, AoiPlot, FunctionLabel, ImperviousStack, QualityResult, SviLayer, SviObservation,
    AOI_PRIMARY_TYPES, GAIA_FIRST, GAIA_LAST, QUALITY_BUFFER, SVI_FIRST_YEAR, SVI_LAST_YEAR,
};
use crate::vectorize::{rasterize, tile_extent, BinaryMask, MaskFileSegmenter};

pub const CELL: f64 = 30.0;
const BLOCK_CELLS: usize = 5;
/// Sub-pixel offset of the "predicted" masks against the truth masks.
const MASK_SHIFT: (f64, f64) = (0.35, -0.25);

#[derive(Debug, Clone, PartialEq)]
pub struct CityParams {
    pub n_buildings: usize,
    /// Strip weights per tier, in [`CityTier::ALL`] order.
    pub tier_mix: [f64; 5],
    /// Block weights per function, in [`FunctionLabel::ALL`] order.
    pub function_mix: [f64; 5],
    pub origin_lon: f64,
    pub origin_lat: f64,
    pub pixel_size: f64,
    pub tile_size_px: usize,
    pub floor_height: f64,
    /// Share of buildings whose reference footprint carries floors.
    pub reference_fraction: f64,
    /// Share of blocks covered by a function-bearing AOI.
    pub aoi_fraction: f64,
}

impl Default for CityParams {
    fn default() -> Self {
        Self {
            n_buildings: 500,
            tier_mix: [1.0; 5],
            function_mix: [0.4, 0.2, 0.15, 0.1, 0.15],
            origin_lon: 114.3,
            origin_lat: 30.6,
            pixel_size: 1.0,
            tile_size_px: 256,
            floor_height: 3.0,
            reference_fraction: 0.9,
            aoi_fraction: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthBuilding {
    pub id: String,
    pub polygon: Polygon,
    pub tier: CityTier,
    pub city_id: Option<String>,
    pub function: FunctionLabel,
    pub floors: u32,
    pub height: f64,
    pub age: AgeClass,
    /// Quality computed from the synthetic street views at the true centroid.
    pub quality: QualityResult,
    /// Carries floors in the reference layer.
    pub referenced: bool,
}

#[derive(Debug, Clone)]
pub struct SyntheticCity {
    pub seed: u64,
    pub params: CityParams,
    pub extent: BBox,
    pub buildings: Vec<SynthBuilding>,
    pub roads: Vec<Polyline>,
    pub blocks: Vec<Polygon>,
    pub admins: Vec<AdminArea>,
    pub pois: Vec<Poi>,
    pub aois: Vec<AoiPlot>,
    pub svi: Vec<SviObservation>,
    pub stack: ImperviousStack,
}

impl SyntheticCity {
    pub fn projection(&self) -> Aeqd {
        Aeqd::new(self.params.origin_lon, self.params.origin_lat)
    }
}

/// Ground-truth floors: a different function of rooftop area `a` and
/// elongation `e` per tier.
pub fn tier_floors(tier: CityTier, a: f64, e: f64) -> f64 {
    match tier {
        CityTier::Municipality => 4.0 + a / 12.0 + 4.0 * (a / 25.0).sin(),
        CityTier::ProvincialCapital => 30.0 - a / 16.0 + 6.0 * (3.0 * e).cos(),
        CityTier::PrefectureLevel => 10.0 + 7.0 * (a / 20.0).sin() + 3.0 * (e - 1.0),
        CityTier::CountyLevel => 2.0 + 9.0 * (e - 1.0) + 3.0 * (a / 30.0).sin(),
        CityTier::NonUrban => 1.0 + 2.0 * (a > 200.0) as u8 as f64 + (e > 1.6) as u8 as f64,
    }
}

fn pick(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen_range(0.0..total);
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

fn side_range(f: FunctionLabel) -> (f64, f64) {
    match f {
        FunctionLabel::Residential => (8.0, 16.0),
        FunctionLabel::Industry => (14.0, 20.0),
        FunctionLabel::Office => (8.0, 20.0),
        _ => (10.0, 20.0),
    }
}

/// POI categories typical of each function.
fn poi_profile(f: FunctionLabel) -> &'static [usize] {
    match f {
        FunctionLabel::Residential => &[14, 3, 0],
        FunctionLabel::Commercial => &[2, 0, 1, 13],
        FunctionLabel::PublicService => &[8, 10, 7],
        FunctionLabel::Industry => &[15, 11],
        FunctionLabel::Office => &[13, 16, 15],
    }
}

fn aoi_type(f: FunctionLabel) -> (&'static str, &'static str) {
    match f {
        FunctionLabel::Residential => ("Real Estate", "Residential Areas"),
        FunctionLabel::Commercial => ("Shopping", "Shopping Centers"),
        FunctionLabel::PublicService => ("Education and Training", "Schools"),
        FunctionLabel::Industry => ("Corporations and Enterprises", "Industrial Parks"),
        FunctionLabel::Office => ("Government Institutions", "Administrative Units"),
    }
}

fn rotated_rect(c: Point, l: f64, w: f64, theta: f64) -> Polygon {
    let (s, co) = theta.sin_cos();
    let ring = [(-l, -w), (l, -w), (l, w), (-l, w)]
        .iter()
        .map(|&(u, v)| Point::new(c.x + 0.5 * (u * co - v * s), c.y + 0.5 * (u * s + v * co)))
        .collect();
    Polygon::from_ring(ring).expect("rectangle is valid")
}

fn bad(message: &str) -> PipelineError {
    PipelineError::Config {
        line: 0,
        message: message.into(),
    }
}

pub fn synth_city(seed: u64, params: &CityParams) -> Result<SyntheticCity, PipelineError> {
    let weights_ok = |w: &[f64; 5]| w.iter().all(|x| *x >= 0.0 && x.is_finite()) && w.iter().sum::<f64>() > 0.0;
    if !weights_ok(&params.tier_mix) || !weights_ok(&params.function_mix) {
        return Err(bad("tier and function mixes need non-negative weights with a positive sum"));
    }
    if !(0.0..=1.0).contains(&params.reference_fraction) || !(0.0..=1.0).contains(&params.aoi_fraction) {
        return Err(bad("fractions must lie in [0, 1]"));
    }
    if !(params.pixel_size > 0.0) || params.tile_size_px == 0 || !(params.floor_height > 0.0) {
        return Err(bad("pixel size, tile size and floor height must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // 16 building cells per block, filled to about 80%
    let nb = ((params.n_buildings as f64 / (16.0 * 0.8)).sqrt().ceil() as usize).max(1);
    let g = BLOCK_CELLS * nb + 1;
    let half = g as f64 * CELL / 2.0;
    let extent = BBox::new(-half, -half, half, half);
    let cell_x = |i: usize| extent.min_x + i as f64 * CELL;
    let cell_y = |j: usize| extent.min_y + j as f64 * CELL;

    // tier strips over block columns
    let total: f64 = params.tier_mix.iter().sum();
    let mut cum = 0.0;
    let bounds: Vec<f64> = params.tier_mix.iter().map(|w| {
        cum += w / total;
        cum
    }).collect();
    let column_tier: Vec<CityTier> = (0..nb)
        .map(|bi| {
            let u = (bi as f64 + 0.5) / nb as f64;
            CityTier::ALL[bounds.iter().position(|&b| u < b).unwrap_or(4)]
        })
        .collect();
    let mut admins = Vec::new();
    for (t, &tier) in CityTier::ALL[..4].iter().enumerate() {
        let cols: Vec<usize> = (0..nb).filter(|&bi| column_tier[bi] == tier).collect();
        if let (Some(&a), Some(&b)) = (cols.first(), cols.last()) {
            let x0 = cell_x(BLOCK_CELLS * a) + CELL / 2.0;
            let x1 = cell_x(BLOCK_CELLS * (b + 1)) + CELL / 2.0;
            admins.push(AdminArea {
                city_id: format!("city_{}", t + 1),
                tier,
                polygon: Polygon::rect(x0, extent.min_y, x1, extent.max_y)?,
            });
        }
    }

    let mut blocks = Vec::with_capacity(nb * nb);
    let mut block_fn = Vec::with_capacity(nb * nb);
    for bj in 0..nb {
        for bi in 0..nb {
            let (x0, y0) = (cell_x(BLOCK_CELLS * bi + 1), cell_y(BLOCK_CELLS * bj + 1));
            blocks.push(Polygon::rect(x0, y0, x0 + 4.0 * CELL, y0 + 4.0 * CELL)?);
            block_fn.push(FunctionLabel::ALL[pick(&mut rng, &params.function_mix)]);
        }
    }
    let block_of = |i: usize, j: usize| (j / BLOCK_CELLS) * nb + i / BLOCK_CELLS;

    let mut slots: Vec<(usize, usize)> = (0..g)
        .flat_map(|j| (0..g).map(move |i| (i, j)))
        .filter(|&(i, j)| i % BLOCK_CELLS != 0 && j % BLOCK_CELLS != 0)
        .collect();
    slots.shuffle(&mut rng);
    slots.truncate(params.n_buildings);
    slots.sort_by_key(|&(i, j)| (j, i));

    struct Draft {
        cell: (usize, usize),
        polygon: Polygon,
        tier: CityTier,
        function: FunctionLabel,
        floors: u32,
        age: AgeClass,
        referenced: bool,
    }
    let drafts: Vec<Draft> = slots
        .iter()
        .map(|&(i, j)| {
            let function = block_fn[block_of(i, j)];
            let tier = column_tier[i / BLOCK_CELLS];
            let (lo, hi) = side_range(function);
            let l = rng.gen_range(lo..=hi);
            let w = rng.gen_range((l / 2.5).max(8.0).min(l)..=l);
            let theta = rng.gen_range(-10f64..10.0).to_radians();
            let c = Point::new(
                cell_x(i) + CELL / 2.0 + rng.gen_range(-1.5..1.5),
                cell_y(j) + CELL / 2.0 + rng.gen_range(-1.5..1.5),
            );
            let mut f = tier_floors(tier, l * w, l / w);
            if rng.gen_bool(0.1) {
                f += if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            }
            let age = if rng.gen_bool(0.1) {
                AgeClass::AF2018
            } else {
                AgeClass::Year(rng.gen_range(GAIA_FIRST..=GAIA_LAST))
            };
            Draft {
                cell: (i, j),
                polygon: rotated_rect(c, l, w, theta),
                tier,
                function,
                floors: f.round().max(1.0) as u32,
                age,
                referenced: rng.gen_bool(params.reference_fraction),
            }
        })
        .collect();

    let mut roads = Vec::new();
    for k in 0..=nb {
        let x = cell_x(BLOCK_CELLS * k) + CELL / 2.0;
        roads.push(Polyline::new(vec![Point::new(x, extent.min_y), Point::new(x, extent.max_y)])?);
    }
    for k in 0..=nb {
        let y = cell_y(BLOCK_CELLS * k) + CELL / 2.0;
        roads.push(Polyline::new(vec![Point::new(extent.min_x, y), Point::new(extent.max_x, y)])?);
    }

    let mut pois = Vec::new();
    for (b, poly) in blocks.iter().enumerate() {
        let bb = poly.bbox();
        let profile = poi_profile(block_fn[b]);
        for _ in 0..8 {
            let category = if rng.gen_bool(0.8) {
                profile[rng.gen_range(0..profile.len())]
            } else {
                rng.gen_range(0..POI_CATEGORIES.len())
            };
            let point = Point::new(rng.gen_range(bb.min_x..bb.max_x), rng.gen_range(bb.min_y..bb.max_y));
            pois.push(Poi { point, category });
        }
    }

    let mut aois = Vec::new();
    let natural = AOI_PRIMARY_TYPES.iter().position(|&t| t == "Natural Features").unwrap();
    aois.push(AoiPlot::new(Polygon::rect(extent.min_x, extent.min_y, extent.max_x, extent.max_y)?, natural, "Mountains")?);
    for (b, poly) in blocks.iter().enumerate() {
        if rng.gen_bool(params.aoi_fraction) {
            let bb = poly.bbox().inflate(-1.0);
            let (primary, secondary) = aoi_type(block_fn[b]);
            let t = AOI_PRIMARY_TYPES.iter().position(|&n| n == primary).unwrap();
            aois.push(AoiPlot::new(Polygon::rect(bb.min_x, bb.min_y, bb.max_x, bb.max_y)?, t, secondary)?);
        }
    }

    // street views every 40 m along 80% of the roads; disorder rises to the east
    let mut svi = Vec::new();
    for (r, road) in roads.iter().enumerate() {
        if !rng.gen_bool(0.8) {
            continue;
        }
        let (a, b) = (road.vertices()[0], road.vertices()[1]);
        let heading = if r <= nb { 0.0 } else { 90.0 };
        let len = a.distance(&b);
        let mut s = 20.0;
        while s < len {
            let p = Point::new(a.x + (b.x - a.x) * s / len, a.y + (b.y - a.y) * s / len);
            s += 40.0;
            let mut o = SviObservation::new(&format!("s{:05}", svi.len()), p, heading);
            if !rng.gen_bool(0.08) {
                let d = 0.05 + 0.35 * (p.x - extent.min_x) / extent.width();
                for year in SVI_FIRST_YEAR..=SVI_LAST_YEAR {
                    if rng.gen_bool(0.3) {
                        for _ in 0..rng.gen_range(1..=3) {
                            let flags = std::array::from_fn(|k| rng.gen_bool(d * (1.0 - 0.1 * k as f64)));
                            o.add_image(year, flags)?;
                        }
                    }
                }
            }
            svi.push(o);
        }
    }

    let mut layers: Vec<AsciiGrid> =
        (GAIA_FIRST..=GAIA_LAST).map(|_| AsciiGrid::new(g, g, extent.min_x, extent.min_y, CELL)).collect();
    let mut first: Vec<Option<i32>> = vec![None; g * g];
    for j in 0..g {
        for i in 0..g {
            if i % BLOCK_CELLS == 0 || j % BLOCK_CELLS == 0 {
                first[j * g + i] = Some(GAIA_FIRST);
            }
        }
    }
    for d in &drafts {
        first[d.cell.1 * g + d.cell.0] = match d.age {
            AgeClass::Year(y) => Some(y),
            AgeClass::AF2018 => None,
        };
    }
    for j in 0..g {
        for i in 0..g {
            let Some(y0) = first[j * g + i] else { continue };
            let (c, r) = layers[0].cell_of(cell_x(i) + CELL / 2.0, cell_y(j) + CELL / 2.0).expect("inside");
            for (k, layer) in layers.iter_mut().enumerate() {
                if GAIA_FIRST + k as i32 >= y0 {
                    layer.set(c, r, 1.0);
                }
            }
        }
    }
    let stack = ImperviousStack::new(layers)?;

    let layer = SviLayer::new(svi);
    let buildings = drafts
        .into_iter()
        .enumerate()
        .map(|(n, d)| {
            let c = d.polygon.centroid();
            SynthBuilding {
                id: format!("r{n:05}"),
                quality: quality_latest(&layer.in_buffer(&c, QUALITY_BUFFER)),
                city_id: admins.iter().find(|a| a.tier == d.tier).map(|a| a.city_id.clone()),
                polygon: d.polygon,
                tier: d.tier,
                function: d.function,
                floors: d.floors,
                height: d.floors as f64 * params.floor_height,
                age: d.age,
                referenced: d.referenced,
            }
        })
        .collect();

    Ok(SyntheticCity {
        seed,
        params: params.clone(),
        extent,
        buildings,
        roads,
        blocks,
        admins,
        pois,
        aois,
        svi: layer.observations,
        stack,
    })
}

fn write_masks(dir: &Path, city: &SyntheticCity, shift: (f64, f64)) -> Result<(), PipelineError> {
    let p = &city.params;
    let grid = tile_extent(&city.extent, p.tile_size_px, p.pixel_size)?;
    let polys: Vec<Polygon> = city.buildings.iter().map(|b| b.polygon.translate(shift.0, shift.1)).collect();
    let index = SpatialIndex::build(polys.iter().enumerate().map(|(i, q)| (i, q.bbox())));
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    for (row, col) in grid.tiles() {
        let bb = grid.tile_bbox(row, col);
        let hits: Vec<Polygon> = index.query(&bb).into_iter().map(|i| polys[i].clone()).collect();
        if hits.is_empty() {
            continue;
        }
        let blank = BinaryMask::zeros(
            p.tile_size_px,
            p.tile_size_px,
            crate::vectorize::MaskTransform {
                x_ll: bb.min_x,
                y_ll: bb.min_y,
                pixel_size: p.pixel_size,
            },
        );
        let m = rasterize(&hits, &blank);
        if m.count_ones() > 0 {
            write_atomic(&dir.join(MaskFileSegmenter::file_name(row, col)), m.to_grid().to_text().as_bytes())?;
        }
    }
    Ok(())
}

/// A 4×4 binary PPM standing in for a street-view crop.
fn tiny_image(seed: usize) -> Vec<u8> {
    let mut v = b"P6\n4 4\n255\n".to_vec();
    for i in 0..16 {
        let s = (seed * 31 + i * 17) % 256;
        v.extend_from_slice(&[s as u8, (255 - s) as u8, ((s * 7) % 256) as u8]);
    }
    v
}

/// Writes every input layer plus `pipeline.conf` (with `overrides` applied)
/// under `dir`; returns the config path.
pub fn write_city(dir: &Path, city: &SyntheticCity, overrides: &[(&str, &str)]) -> Result<PathBuf, PipelineError> {
    let proj = city.projection();
    let save = |name: &str, feats: &[VectorFeature]| write_atomic(&dir.join(name), features_to_string(feats, &proj).as_bytes());

    let reference: Vec<VectorFeature> = city
        .buildings
        .iter()
        .map(|b| {
            VectorFeature::new(Geometry::Polygon(b.polygon.clone()))
                .with("id", b.id.as_str())
                .with("floors", if b.referenced { Value::from(b.floors) } else { Value::Null })
                .with("true_height", b.height)
                .with("true_function", b.function.as_str())
                .with("true_age", b.age.to_string())
                .with("true_q_total", b.quality.total.map_or(Value::Null, Value::from))
                .with("tier", b.tier.as_str())
        })
        .collect();
    save("reference.geojson", &reference)?;
    save("roads.geojson", &city.roads.iter().map(|r| VectorFeature::new(Geometry::LineString(r.clone()))).collect::<Vec<_>>())?;
    save("blocks.geojson", &city.blocks.iter().map(|b| VectorFeature::new(Geometry::Polygon(b.clone()))).collect::<Vec<_>>())?;
    let admins: Vec<VectorFeature> = city
        .admins
        .iter()
        .map(|a| VectorFeature::new(Geometry::Polygon(a.polygon.clone())).with("city_id", a.city_id.as_str()).with("tier", a.tier.as_str()))
        .collect();
    save("admins.geojson", &admins)?;
    let aois: Vec<VectorFeature> = city
        .aois
        .iter()
        .map(|a| {
            VectorFeature::new(Geometry::Polygon(a.polygon.clone()))
                .with("primary_type", AOI_PRIMARY_TYPES[a.primary_type])
                .with("secondary_type", a.secondary_type.as_str())
        })
        .collect();
    save("aois.geojson", &aois)?;
    write_atomic(&dir.join("pois.csv"), write_pois(&city.pois, &proj).as_bytes())?;
    write_atomic(&dir.join("svi.csv"), write_svi(&city.svi, &proj).as_bytes())?;
    for o in 0..city.svi.len() {
        write_atomic(&dir.join("images").join(format!("{}.ppm", city.svi[o].point_id)), &tiny_image(o))?;
    }
    let gaia = dir.join("impervious");
    for (k, layer) in city.stack.layers().iter().enumerate() {
        write_atomic(&gaia.join(format!("gaia_{}.asc", GAIA_FIRST + k as i32)), layer.to_text().as_bytes())?;
    }
    write_masks(&dir.join("truth_masks"), city, (0.0, 0.0))?;
    write_masks(&dir.join("masks"), city, MASK_SHIFT)?;

    let e = &city.extent;
    let p = &city.params;
    let mut cfg = PipelineConfig::parse("", dir)?;
    for (k, v) in [
        ("seed", city.seed.to_string()),
        ("origin_lon", p.origin_lon.to_string()),
        ("origin_lat", p.origin_lat.to_string()),
        ("extent", format!("{},{},{},{}", e.min_x, e.min_y, e.max_x, e.max_y)),
        ("tile_size_px", p.tile_size_px.to_string()),
        ("pixel_size", p.pixel_size.to_string()),
        ("floor_height", p.floor_height.to_string()),
        ("masks_dir", "masks".into()),
        ("truth_masks_dir", "truth_masks".into()),
        ("reference", "reference.geojson".into()),
        ("roads", "roads.geojson".into()),
        ("blocks", "blocks.geojson".into()),
        ("admins", "admins.geojson".into()),
        ("aois", "aois.geojson".into()),
        ("pois", "pois.csv".into()),
        ("svi", "svi.csv".into()),
        ("impervious_dir", "impervious".into()),
        ("images_dir", "images".into()),
    ] {
        cfg.set(k, &v)?;
    }
    for (k, v) in overrides {
        cfg.set(k, v)?;
    }
    let path = dir.join("pipeline.conf");
    write_atomic(&path, cfg.to_text().as_bytes())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indicative::assign_age;
    use crate::vectorize::mask_to_polygons;

    fn small(n: usize) -> CityParams {
        CityParams {
            n_buildings: n,
            tile_size_px: 128,
            ..CityParams::default()
        }
    }

    #[test]
    fn deterministic_and_well_formed() {
        let a = synth_city(3, &small(120)).unwrap();
        let b = synth_city(3, &small(120)).unwrap();
        assert_eq!(a.buildings, b.buildings);
        assert_eq!(a.buildings.len(), 120);
        let idx = SpatialIndex::build(a.buildings.iter().enumerate().map(|(i, b)| (i, b.polygon.bbox())));
        for (i, b) in a.buildings.iter().enumerate() {
            // own cell only: bounding boxes never touch
            assert_eq!(idx.query(&b.polygon.bbox()), vec![i]);
            assert_eq!(assign_age(&b.polygon.centroid(), &a.stack).unwrap(), b.age);
            assert!(b.floors >= 1);
        }
        assert!(synth_city(4, &small(120)).unwrap().buildings != a.buildings);

        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        write_city(d1.path(), &a, &[]).unwrap();
        write_city(d2.path(), &b, &[]).unwrap();
        for f in ["reference.geojson", "svi.csv", "pois.csv", "pipeline.conf", "masks/tile_r1_c1.asc"] {
            assert_eq!(std::fs::read(d1.path().join(f)).unwrap(), std::fs::read(d2.path().join(f)).unwrap(), "{f}");
        }
        let cfg = PipelineConfig::load(&d1.path().join("pipeline.conf")).unwrap();
        cfg.check_paths().unwrap();
        assert_eq!(crate::pipeline::load_svi(&cfg.path("svi").unwrap(), &a.projection()).unwrap().len(), a.svi.len());
    }

    #[test]
    fn empty_city_is_valid() {
        let c = synth_city(1, &small(0)).unwrap();
        assert!(c.buildings.is_empty());
        assert!(!c.roads.is_empty());
        let d = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig::load(&write_city(d.path(), &c, &[]).unwrap()).unwrap();
        cfg.check_paths().unwrap();
    }

    #[test]
    fn raster_round_trip_within_one_pixel_band() {
        let c = synth_city(9, &small(60)).unwrap();
        for b in &c.buildings {
            let bb = b.polygon.bbox().inflate(3.0);
            let (x0, y0) = (bb.min_x.floor(), bb.min_y.floor());
            let (w, h) = ((bb.max_x - x0).ceil() as usize, (bb.max_y - y0).ceil() as usize);
            let blank = BinaryMask::zeros(w, h, crate::vectorize::MaskTransform { x_ll: x0, y_ll: y0, pixel_size: 1.0 });
            let polys = mask_to_polygons(&rasterize(std::slice::from_ref(&b.polygon), &blank), 0.0);
            assert_eq!(polys.len(), 1);
            let diff = (polys[0].area() - b.polygon.area()).abs();
            assert!(diff <= b.polygon.perimeter() * c.params.pixel_size, "{} vs {}", polys[0].area(), b.polygon.area());
        }
    }
}
