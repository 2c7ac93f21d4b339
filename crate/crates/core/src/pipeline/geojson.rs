//! FeatureCollection reading and writing (RFC 7946 structure, WGS84
//! coordinates), reprojected to and from the local planar frame.

use std::path::Path;

use serde_json::{json, Map, Value};

use super::{write_atomic, Aeqd, PipelineError};
use crate::geom::{Point, Polygon, Polyline};

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(Point),
    LineString(Polyline),
    Polygon(Polygon),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorFeature {
    pub geometry: Geometry,
    pub properties: Map<String, Value>,
}

impl VectorFeature {
    pub fn new(geometry: Geometry) -> Self {
        Self {
            geometry,
            properties: Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.properties.insert(key.into(), value.into());
        self
    }

    pub fn polygon(&self) -> Option<&Polygon> {
        match &self.geometry {
            Geometry::Polygon(p) => Some(p),
            _ => None,
        }
    }

    pub fn str_prop(&self, key: &str) -> Option<&str> {
        self.properties.get(key).and_then(Value::as_str)
    }

    pub fn num_prop(&self, key: &str) -> Option<f64> {
        self.properties.get(key).and_then(Value::as_f64)
    }
}

fn bad(feature: usize, message: impl Into<String>) -> PipelineError {
    PipelineError::Vector {
        feature: Some(feature),
        message: message.into(),
    }
}

fn position(v: &Value, proj: &Aeqd, i: usize) -> Result<Point, PipelineError> {
    let a = v.as_array().filter(|a| a.len() >= 2).ok_or_else(|| bad(i, "position must be [lon, lat]"))?;
    let (lon, lat) = (a[0].as_f64(), a[1].as_f64());
    match (lon, lat) {
        (Some(lon), Some(lat)) if lon.is_finite() && lat.is_finite() => Ok(proj.forward(lon, lat)),
        _ => Err(bad(i, "non-numeric coordinate")),
    }
}

fn positions(v: &Value, proj: &Aeqd, i: usize) -> Result<Vec<Point>, PipelineError> {
    v.as_array().ok_or_else(|| bad(i, "expected a coordinate array"))?.iter().map(|p| position(p, proj, i)).collect()
}

fn parse_geometry(g: &Value, proj: &Aeqd, i: usize) -> Result<Geometry, PipelineError> {
    let kind = g.get("type").and_then(Value::as_str).ok_or_else(|| bad(i, "geometry without type"))?;
    let coords = g.get("coordinates").ok_or_else(|| bad(i, "geometry without coordinates"))?;
    match kind {
        "Point" => Ok(Geometry::Point(position(coords, proj, i)?)),
        "LineString" => Polyline::new(positions(coords, proj, i)?)
            .map(Geometry::LineString)
            .map_err(|e| bad(i, e.to_string())),
        "Polygon" => {
            let rings = coords.as_array().filter(|r| !r.is_empty()).ok_or_else(|| bad(i, "polygon without rings"))?;
            let mut rings = rings.iter().map(|r| positions(r, proj, i)).collect::<Result<Vec<_>, _>>()?;
            let exterior = rings.remove(0);
            Polygon::new(exterior, rings).map(Geometry::Polygon).map_err(|e| bad(i, e.to_string()))
        }
        other => Err(bad(i, format!("unsupported geometry type `{other}`"))),
    }
}

pub fn parse_features(text: &str, proj: &Aeqd) -> Result<Vec<VectorFeature>, PipelineError> {
    let root: Value = serde_json::from_str(text).map_err(|e| PipelineError::Vector {
        feature: None,
        message: format!("line {} column {}: {e}", e.line(), e.column()),
    })?;
    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(PipelineError::Vector {
            feature: None,
            message: "not a FeatureCollection".into(),
        });
    }
    let feats = root.get("features").and_then(Value::as_array).ok_or_else(|| PipelineError::Vector {
        feature: None,
        message: "missing features array".into(),
    })?;
    feats
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let geometry = parse_geometry(f.get("geometry").ok_or_else(|| bad(i, "feature without geometry"))?, proj, i)?;
            let properties = match f.get("properties") {
                None | Some(Value::Null) => Map::new(),
                Some(Value::Object(m)) => m.clone(),
                Some(_) => return Err(bad(i, "properties must be an object")),
            };
            Ok(VectorFeature { geometry, properties })
        })
        .collect()
}

fn lonlat(p: &Point, proj: &Aeqd) -> Value {
    let (lon, lat) = proj.inverse(p);
    json!([lon, lat])
}

fn ring(r: &[Point], proj: &Aeqd) -> Value {
    let mut v: Vec<Value> = r.iter().map(|p| lonlat(p, proj)).collect();
    v.push(lonlat(&r[0], proj));
    Value::Array(v)
}

pub fn features_to_string(features: &[VectorFeature], proj: &Aeqd) -> String {
    let feats: Vec<Value> = features
        .iter()
        .map(|f| {
            let geometry = match &f.geometry {
                Geometry::Point(p) => json!({"type": "Point", "coordinates": lonlat(p, proj)}),
                Geometry::LineString(l) => json!({
                    "type": "LineString",
                    "coordinates": l.vertices().iter().map(|p| lonlat(p, proj)).collect::<Vec<_>>()
                }),
                Geometry::Polygon(p) => {
                    let rings: Vec<Value> = p.rings().map(|r| ring(r, proj)).collect();
                    json!({"type": "Polygon", "coordinates": rings})
                }
            };
            json!({"type": "Feature", "geometry": geometry, "properties": f.properties})
        })
        .collect();
    let mut s = serde_json::to_string(&json!({"type": "FeatureCollection", "features": feats})).expect("json");
    s.push('\n');
    s
}

pub fn load_vector(path: &Path, proj: &Aeqd) -> Result<Vec<VectorFeature>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    parse_features(&text, proj).map_err(|e| e.within(path))
}

pub fn save_vector(path: &Path, features: &[VectorFeature], proj: &Aeqd) -> Result<(), PipelineError> {
    write_atomic(path, features_to_string(features, proj).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: Aeqd = Aeqd { lon0: 114.3, lat0: 30.6 };

    #[test]
    fn polygon_round_trip_and_displacement() {
        let poly = Polygon::rect(-50.0, 10.0, 20.0, 45.0).unwrap();
        let f = vec![
            VectorFeature::new(Geometry::Polygon(poly.clone())).with("id", "a").with("h", 12.5),
            VectorFeature::new(Geometry::Point(Point::new(3.0, 4.0))),
            VectorFeature::new(Geometry::LineString(Polyline::new(vec![Point::new(0., 0.), Point::new(100., 0.)]).unwrap())),
        ];
        let text = features_to_string(&f, &P);
        let back = parse_features(&text, &P).unwrap();
        assert_eq!(back[0].properties, f[0].properties);
        let q = back[0].polygon().unwrap();
        for (a, b) in q.exterior().iter().zip(poly.exterior()) {
            assert!(a.distance(b) < 1e-6);
        }
        // a second save reproduces the same degrees
        let again = parse_features(&features_to_string(&back, &P), &P).unwrap();
        for (a, b) in again[0].polygon().unwrap().exterior().iter().zip(q.exterior()) {
            let (la, pa) = P.inverse(a);
            let (lb, pb) = P.inverse(b);
            assert!((la - lb).abs() < 1e-6 && (pa - pb).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_two_vertex_polygon_with_index() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","geometry":{"type":"Point","coordinates":[114.3,30.6]},"properties":{}},
            {"type":"Feature","geometry":{"type":"Polygon","coordinates":[[[114.3,30.6],[114.31,30.6],[114.3,30.6]]]},"properties":{}}
        ]}"#;
        match parse_features(text, &P) {
            Err(PipelineError::Vector { feature: Some(1), .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_features("{\"type\":\n\"Feature", &P) {
            Err(PipelineError::Vector { feature: None, message }) => assert!(message.starts_with("line 2")),
            other => panic!("{other:?}"),
        }
    }
}
