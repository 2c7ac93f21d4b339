//! Output building schema. Every feature carries every key; absent values
//! are `null`.
//!
//! | key | type |
//! |---|---|
//! | `id` | string |
//! | `height` | number (m) |
//! | `h_re_min`, `h_re_max` | number, relative-error range over members (only where truth exists) |
//! | `func` | `residential`, `commercial`, `public_service`, `industry`, `office` |
//! | `func_vote` | number in (0, 1], share of members voting `func` |
//! | `age` | `"1985"`..`"2018"` or `"AF2018"` |
//! | `q_k1`..`q_k6` | number in [0, 1], or `"NoObservationPoints"` / `"NoImagesThatYear"` |
//! | `q_total` | number in [0, 6] |
//! | `q_year` | integer |
//! | `tier` | city tier name |
//! | `city_id` | string |

use serde_json::{Map, Value};

use super::{Geometry, PipelineError, VectorFeature};
use crate::features::CityTier;
use crate::geom::Polygon;
use crate::indicative::{AgeClass, FunctionLabel, QualityMode, QualityResult};

/// Property keys in schema order.
pub const RECORD_KEYS: [&str; 17] = [
    "id", "height", "h_re_min", "h_re_max", "func", "func_vote", "age", "q_k1", "q_k2", "q_k3", "q_k4", "q_k5", "q_k6",
    "q_total", "q_year", "tier", "city_id",
];

#[derive(Debug, Clone, PartialEq)]
pub struct BuildingRecord {
    pub id: String,
    pub polygon: Polygon,
    pub height: Option<f64>,
    pub h_re: Option<(f64, f64)>,
    pub func: Option<FunctionLabel>,
    pub func_vote: Option<f64>,
    pub age: Option<AgeClass>,
    pub quality: Option<QualityResult>,
    pub tier: Option<CityTier>,
    pub city_id: Option<String>,
}

impl BuildingRecord {
    pub fn new(id: &str, polygon: Polygon) -> Self {
        Self {
            id: id.into(),
            polygon,
            height: None,
            h_re: None,
            func: None,
            func_vote: None,
            age: None,
            quality: None,
            tier: None,
            city_id: None,
        }
    }

    pub fn to_feature(&self) -> VectorFeature {
        let mut p = Map::new();
        let num = |v: Option<f64>| v.map_or(Value::Null, Value::from);
        let text = |v: Option<String>| v.map_or(Value::Null, Value::from);
        p.insert("id".into(), self.id.clone().into());
        p.insert("height".into(), num(self.height));
        p.insert("h_re_min".into(), num(self.h_re.map(|r| r.0)));
        p.insert("h_re_max".into(), num(self.h_re.map(|r| r.1)));
        p.insert("func".into(), text(self.func.map(|f| f.as_str().into())));
        p.insert("func_vote".into(), num(self.func_vote));
        p.insert("age".into(), text(self.age.map(|a| a.to_string())));
        p.extend(quality_to_props(self.quality.as_ref()));
        p.insert("tier".into(), text(self.tier.map(|t| t.as_str().into())));
        p.insert("city_id".into(), text(self.city_id.clone()));
        VectorFeature {
            geometry: Geometry::Polygon(self.polygon.clone()),
            properties: p,
        }
    }

    /// Validates a feature against the schema.
    pub fn from_feature(f: &VectorFeature, index: usize) -> Result<Self, PipelineError> {
        let bad = |message: String| PipelineError::Vector {
            feature: Some(index),
            message,
        };
        let polygon = f.polygon().ok_or_else(|| bad("expected a Polygon".into()))?.clone();
        for k in RECORD_KEYS {
            if !f.properties.contains_key(k) {
                return Err(bad(format!("missing property `{k}`")));
            }
        }
        let get = |k: &str| &f.properties[k];
        let num = |k: &str| -> Result<Option<f64>, PipelineError> {
            match get(k) {
                Value::Null => Ok(None),
                v => v.as_f64().map(Some).ok_or_else(|| bad(format!("`{k}` must be a number"))),
            }
        };
        let text = |k: &str| -> Result<Option<&str>, PipelineError> {
            match get(k) {
                Value::Null => Ok(None),
                v => v.as_str().map(Some).ok_or_else(|| bad(format!("`{k}` must be a string"))),
            }
        };
        let parsed = |k: &str, e: &dyn std::fmt::Display| bad(format!("`{k}`: {e}"));

        let id = text("id")?.ok_or_else(|| bad("`id` is required".into()))?.to_string();
        let height = num("height")?;
        if height.is_some_and(|h| !(h > 0.0)) {
            return Err(bad("`height` must be positive".into()));
        }
        let h_re = match (num("h_re_min")?, num("h_re_max")?) {
            (Some(a), Some(b)) if a <= b => Some((a, b)),
            (None, None) => None,
            _ => return Err(bad("`h_re_min`/`h_re_max` must both be set with min <= max".into())),
        };
        let func = text("func")?.map(|s| s.parse::<FunctionLabel>().map_err(|e| parsed("func", &e))).transpose()?;
        let func_vote = num("func_vote")?;
        let age = text("age")?.map(|s| s.parse::<AgeClass>().map_err(|e| parsed("age", &e))).transpose()?;
        let quality = quality_from_props(&f.properties).map_err(bad)?;
        let tier = text("tier")?.map(|s| s.parse::<CityTier>().map_err(|e| parsed("tier", &e))).transpose()?;
        let city_id = text("city_id")?.map(str::to_string);
        Ok(Self {
            id,
            polygon,
            height,
            h_re,
            func,
            func_vote,
            age,
            quality,
            tier,
            city_id,
        })
    }
}

fn mode_value(m: &QualityMode) -> Value {
    match m {
        QualityMode::NoObservationPoints => "NoObservationPoints".into(),
        QualityMode::NoImagesThatYear => "NoImagesThatYear".into(),
        QualityMode::Score(v) => (*v).into(),
    }
}

/// `q_k1..q_k6`, `q_total`, `q_year`; all `null` when quality was not run.
pub fn quality_to_props(q: Option<&QualityResult>) -> Map<String, Value> {
    let mut p = Map::new();
    for k in 0..6 {
        p.insert(format!("q_k{}", k + 1), q.map_or(Value::Null, |q| mode_value(&q.types[k])));
    }
    p.insert("q_total".into(), q.and_then(|q| q.total).map_or(Value::Null, Value::from));
    p.insert("q_year".into(), q.and_then(|q| q.year).map_or(Value::Null, Value::from));
    p
}

fn quality_from_props(p: &Map<String, Value>) -> Result<Option<QualityResult>, String> {
    let keys: Vec<String> = (1..=6).map(|k| format!("q_k{k}")).collect();
    if keys.iter().all(|k| p[k].is_null()) {
        if !p["q_total"].is_null() || !p["q_year"].is_null() {
            return Err("`q_total`/`q_year` set without per-type scores".into());
        }
        return Ok(None);
    }
    let mut types = [QualityMode::NoObservationPoints; 6];
    for (t, k) in types.iter_mut().zip(&keys) {
        *t = match &p[k] {
            Value::String(s) if s == "NoObservationPoints" => QualityMode::NoObservationPoints,
            Value::String(s) if s == "NoImagesThatYear" => QualityMode::NoImagesThatYear,
            v => match v.as_f64() {
                Some(x) if (0.0..=1.0).contains(&x) => QualityMode::Score(x),
                _ => return Err(format!("`{k}` must be a score in [0, 1] or a mode string")),
            },
        };
    }
    let total = match &p["q_total"] {
        Value::Null => None,
        v => match v.as_f64() {
            Some(x) if (0.0..=6.0).contains(&x) => Some(x),
            _ => return Err("`q_total` must be in [0, 6]".into()),
        },
    };
    let year = match &p["q_year"] {
        Value::Null => None,
        v => Some(v.as_i64().ok_or("`q_year` must be an integer")? as i32),
    };
    Ok(Some(QualityResult { year, types, total }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{features_to_string, parse_features, Aeqd};
    use rand::{Rng, SeedableRng};

    #[test]
    fn hundred_records_round_trip() {
        let proj = Aeqd::new(114.3, 30.6);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let records: Vec<BuildingRecord> = (0..100)
            .map(|i| {
                let (x, y) = (rng.gen_range(-2000.0..2000.0), rng.gen_range(-2000.0..2000.0));
                let mut r = BuildingRecord::new(&format!("b{i}"), Polygon::rect(x, y, x + 12.5, y + 9.0).unwrap());
                if i % 4 != 0 {
                    r.height = Some(rng.gen_range(3.0..90.0));
                    r.h_re = Some((0.01 * i as f64, 0.02 * i as f64 + 0.1));
                    r.func = FunctionLabel::from_index(i % 5);
                    r.func_vote = Some(rng.gen_range(0.2..1.0));
                    r.age = Some(if i % 7 == 0 { AgeClass::AF2018 } else { AgeClass::Year(1985 + (i % 34) as i32) });
                    r.tier = Some(CityTier::ALL[i % 5]);
                    r.city_id = Some(format!("c{}", i % 3));
                    let mut types = [QualityMode::Score(rng.gen_range(0.0..1.0)); 6];
                    types[i % 6] = QualityMode::NoImagesThatYear;
                    r.quality = Some(match i % 3 {
                        0 => QualityResult { year: Some(2021), types: [QualityMode::Score(0.25); 6], total: Some(1.5) },
                        1 => QualityResult { year: Some(2019), types, total: None },
                        _ => QualityResult { year: None, types: [QualityMode::NoObservationPoints; 6], total: None },
                    });
                }
                r
            })
            .collect();
        let text = features_to_string(&records.iter().map(BuildingRecord::to_feature).collect::<Vec<_>>(), &proj);
        let back: Vec<BuildingRecord> = parse_features(&text, &proj)
            .unwrap()
            .iter()
            .enumerate()
            .map(|(i, f)| BuildingRecord::from_feature(f, i).unwrap())
            .collect();
        for (a, b) in records.iter().zip(&back) {
            assert_eq!(BuildingRecord { polygon: a.polygon.clone(), ..b.clone() }, *a);
            for (p, q) in a.polygon.exterior().iter().zip(b.polygon.exterior()) {
                assert!(p.distance(q) < 1e-6);
            }
        }
    }

    #[test]
    fn schema_violations_are_rejected() {
        let f = BuildingRecord::new("x", Polygon::rect(0., 0., 1., 1.).unwrap()).to_feature();
        assert!(BuildingRecord::from_feature(&f, 0).is_ok());
        for (k, v) in [
            ("height", Value::from(-1.0)),
            ("func", "shop".into()),
            ("q_total", 7.0.into()),
            ("q_k1", 1.5.into()),
            ("tier", "Village".into()),
        ] {
            let mut g = f.clone();
            g.properties.insert(k.into(), v);
            assert!(BuildingRecord::from_feature(&g, 3).is_err(), "{k}");
        }
        let mut g = f.clone();
        g.properties.remove("age");
        assert!(matches!(BuildingRecord::from_feature(&g, 3), Err(PipelineError::Vector { feature: Some(3), .. })));
    }
}
