//! Input layers: FeatureCollections for polygons and roads, CSV for POIs and
//! street-view detections. CSV coordinates are WGS84 `lon`/`lat` (`x`/`y`).

use std::collections::BTreeMap;
use std::path::Path;

use super::{load_vector, Aeqd, Geometry, PipelineError, VectorFeature};
use crate::features::{AdminArea, CityTier, Poi, POI_CATEGORIES};
use crate::geom::{Polygon, Polyline};
use crate::indicative::{AoiPlot, SviObservation, AOI_PRIMARY_TYPES};

fn polygons(path: &Path, proj: &Aeqd) -> Result<Vec<(usize, VectorFeature)>, PipelineError> {
    let feats = load_vector(path, proj)?;
    for (i, f) in feats.iter().enumerate() {
        if f.polygon().is_none() {
            return Err(PipelineError::Vector {
                feature: Some(i),
                message: "expected a Polygon".into(),
            }
            .within(path));
        }
    }
    Ok(feats.into_iter().enumerate().collect())
}

fn prop_err(path: &Path, i: usize, message: String) -> PipelineError {
    PipelineError::Vector {
        feature: Some(i),
        message,
    }
    .within(path)
}

pub fn load_blocks(path: &Path, proj: &Aeqd) -> Result<Vec<Polygon>, PipelineError> {
    Ok(polygons(path, proj)?.into_iter().map(|(_, f)| f.polygon().unwrap().clone()).collect())
}

pub fn load_roads(path: &Path, proj: &Aeqd) -> Result<Vec<Polyline>, PipelineError> {
    load_vector(path, proj)?
        .into_iter()
        .enumerate()
        .map(|(i, f)| match f.geometry {
            Geometry::LineString(l) => Ok(l),
            _ => Err(prop_err(path, i, "expected a LineString".into())),
        })
        .collect()
}

/// Properties `city_id` and `tier` (e.g. `prefecture_level`).
pub fn load_admins(path: &Path, proj: &Aeqd) -> Result<Vec<AdminArea>, PipelineError> {
    polygons(path, proj)?
        .into_iter()
        .map(|(i, f)| {
            let tier: CityTier = f
                .str_prop("tier")
                .ok_or_else(|| prop_err(path, i, "missing `tier`".into()))?
                .parse()
                .map_err(|e: crate::features::FeatureError| prop_err(path, i, e.to_string()))?;
            Ok(AdminArea {
                city_id: f.str_prop("city_id").unwrap_or_default().to_string(),
                tier,
                polygon: f.polygon().unwrap().clone(),
            })
        })
        .collect()
}

/// Properties `primary_type` (table name) and `secondary_type`.
pub fn load_aois(path: &Path, proj: &Aeqd) -> Result<Vec<AoiPlot>, PipelineError> {
    polygons(path, proj)?
        .into_iter()
        .map(|(i, f)| {
            let name = f.str_prop("primary_type").ok_or_else(|| prop_err(path, i, "missing `primary_type`".into()))?;
            let t = AOI_PRIMARY_TYPES
                .iter()
                .position(|n| n.eq_ignore_ascii_case(name))
                .ok_or_else(|| prop_err(path, i, format!("unknown AOI type `{name}`")))?;
            Ok(AoiPlot::new(f.polygon().unwrap().clone(), t, f.str_prop("secondary_type").unwrap_or_default())?)
        })
        .collect()
}

/// Reference footprints carrying training floors and optional truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceBuilding {
    pub id: String,
    pub polygon: Polygon,
    pub floors: Option<f64>,
    pub properties: serde_json::Map<String, serde_json::Value>,
}

pub fn load_reference(path: &Path, proj: &Aeqd) -> Result<Vec<ReferenceBuilding>, PipelineError> {
    polygons(path, proj)?
        .into_iter()
        .map(|(i, f)| {
            Ok(ReferenceBuilding {
                id: f.str_prop("id").map(str::to_string).unwrap_or_else(|| i.to_string()),
                floors: f.num_prop("floors"),
                polygon: f.polygon().unwrap().clone(),
                properties: f.properties,
            })
        })
        .collect()
}

fn table_err(line: usize, message: impl Into<String>) -> PipelineError {
    PipelineError::Table {
        line,
        message: message.into(),
    }
}

fn csv_rows(text: &str, want: &[&str]) -> Result<Vec<(usize, Vec<String>)>, PipelineError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| table_err(1, e.to_string()))?.clone();
    let idx: Vec<usize> = want
        .iter()
        .map(|w| header.iter().position(|h| h == *w).ok_or_else(|| table_err(1, format!("missing column `{w}`"))))
        .collect::<Result<_, _>>()?;
    rdr.records()
        .enumerate()
        .map(|(i, r)| {
            let r = r.map_err(|e| table_err(i + 2, e.to_string()))?;
            Ok((i + 2, idx.iter().map(|&j| r.get(j).unwrap_or("").to_string()).collect()))
        })
        .collect()
}

fn num(line: usize, s: &str, what: &str) -> Result<f64, PipelineError> {
    s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| table_err(line, format!("bad {what} `{s}`")))
}

/// Columns `lon,lat,category` (category name or 0-based index).
pub fn parse_pois(text: &str, proj: &Aeqd) -> Result<Vec<Poi>, PipelineError> {
    csv_rows(text, &["lon", "lat", "category"])?
        .into_iter()
        .map(|(line, r)| {
            let category = POI_CATEGORIES
                .iter()
                .position(|c| c.eq_ignore_ascii_case(&r[2]))
                .or_else(|| r[2].parse::<usize>().ok().filter(|&c| c < POI_CATEGORIES.len()))
                .ok_or_else(|| table_err(line, format!("unknown POI category `{}`", r[2])))?;
            Ok(Poi {
                point: proj.forward(num(line, &r[0], "lon")?, num(line, &r[1], "lat")?),
                category,
            })
        })
        .collect()
}

pub fn write_pois(pois: &[Poi], proj: &Aeqd) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["lon", "lat", "category"]).unwrap();
    for p in pois {
        let (lon, lat) = proj.inverse(&p.point);
        w.write_record([lon.to_string(), lat.to_string(), POI_CATEGORIES[p.category].to_string()]).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

const SVI_COLUMNS: [&str; 12] = [
    "point_id",
    "x",
    "y",
    "heading_deg",
    "year",
    "image_id",
    "flag_k1",
    "flag_k2",
    "flag_k3",
    "flag_k4",
    "flag_k5",
    "flag_k6",
];

/// One row per image; a row with empty `year` declares a point without
/// images. Points keep first-appearance order.
pub fn parse_svi(text: &str, proj: &Aeqd) -> Result<Vec<SviObservation>, PipelineError> {
    let mut order: Vec<String> = Vec::new();
    let mut points: BTreeMap<String, SviObservation> = BTreeMap::new();
    for (line, r) in csv_rows(text, &SVI_COLUMNS)? {
        let p = proj.forward(num(line, &r[1], "x")?, num(line, &r[2], "y")?);
        let heading = num(line, &r[3], "heading_deg")?;
        let obs = points.entry(r[0].clone()).or_insert_with(|| {
            order.push(r[0].clone());
            SviObservation::new(&r[0], p, heading)
        });
        if r[4].is_empty() {
            continue;
        }
        let year: i32 = r[4].parse().map_err(|_| table_err(line, format!("bad year `{}`", r[4])))?;
        let mut flags = [false; 6];
        for (k, f) in flags.iter_mut().enumerate() {
            *f = match r[6 + k].as_str() {
                "0" => false,
                "1" => true,
                other => return Err(table_err(line, format!("flag_k{} must be 0 or 1, got `{other}`", k + 1))),
            };
        }
        obs.add_image(year, flags).map_err(|e| table_err(line, e.to_string()))?;
    }
    Ok(order.into_iter().map(|id| points.remove(&id).unwrap()).collect())
}

pub fn write_svi(obs: &[SviObservation], proj: &Aeqd) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SVI_COLUMNS).unwrap();
    for o in obs {
        let (lon, lat) = proj.inverse(&o.point);
        let head = [o.point_id.clone(), lon.to_string(), lat.to_string(), o.heading.to_string()];
        if o.images.values().all(Vec::is_empty) {
            let mut row = head.to_vec();
            row.extend(std::iter::repeat_n(String::new(), 8));
            w.write_record(&row).unwrap();
        }
        let mut n = 0;
        for (year, imgs) in &o.images {
            for flags in imgs {
                let mut row = head.to_vec();
                row.push(year.to_string());
                row.push(format!("{}_{n}", o.point_id));
                row.extend(flags.iter().map(|&f| (f as u8).to_string()));
                w.write_record(&row).unwrap();
                n += 1;
            }
        }
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

fn read(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))
}

pub fn load_pois(path: &Path, proj: &Aeqd) -> Result<Vec<Poi>, PipelineError> {
    parse_pois(&read(path)?, proj).map_err(|e| e.within(path))
}

pub fn load_svi(path: &Path, proj: &Aeqd) -> Result<Vec<SviObservation>, PipelineError> {
    parse_svi(&read(path)?, proj).map_err(|e| e.within(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;

    const P: Aeqd = Aeqd { lon0: 120.0, lat0: 30.0 };

    #[test]
    fn svi_round_trip() {
        let mut a = SviObservation::new("p1", Point::new(10.0, 20.0), 90.0);
        a.add_image(2019, [true, false, false, true, false, false]).unwrap();
        a.add_image(2021, [false; 6]).unwrap();
        let b = SviObservation::new("p2", Point::new(-5.0, 0.0), 180.0);
        let text = write_svi(&[a.clone(), b.clone()], &P);
        let back = parse_svi(&text, &P).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].images, a.images);
        assert!(back[0].point.distance(&a.point) < 1e-6);
        assert!(back[1].images.is_empty());
        let bad = text.replace(",1,0,0,1,0,0", ",2,0,0,1,0,0");
        assert!(matches!(parse_svi(&bad, &P), Err(PipelineError::Table { line: 2, .. })));
    }

    #[test]
    fn poi_round_trip() {
        let pois = vec![Poi { point: Point::new(1.0, 2.0), category: 3 }, Poi { point: Point::new(-100.0, 50.0), category: 18 }];
        let back = parse_pois(&write_pois(&pois, &P), &P).unwrap();
        assert_eq!(back.iter().map(|p| p.category).collect::<Vec<_>>(), vec![3, 18]);
        assert!(parse_pois("lon,lat,category\n120,30,7\n", &P).unwrap()[0].category == 7);
        assert!(parse_pois("lon,lat,category\n120,30,Nope\n", &P).is_err());
        assert!(parse_pois("lon,lat\n120,30\n", &P).is_err());
    }
}
