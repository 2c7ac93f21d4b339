//! Versioned feature registry and the feature matrix it shapes.
//!
//! Manifest format, one item per line (`#` starts a comment):
//!
//! ```text
//! version 1
//! subset height
//! feature <name> <numeric|categorical> <building|block|city> <levels|-> <description...>
//! ```
//!
//! Categorical levels are `|`-separated; a level's code is its position, and
//! code `levels.len()` is reserved for unknown levels.

use std::fmt::Write as _;

use super::{CityTier, FeatureError, POI_CATEGORIES};

pub const REGISTRY_VERSION: &str = "1";

pub const CLIMATE_ZONES: [&str; 5] = [
    "severe_cold",
    "cold",
    "hot_summer_cold_winter",
    "hot_summer_warm_winter",
    "mild",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureKind {
    Numeric,
    Categorical(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureScale {
    Building,
    Block,
    City,
}

impl FeatureScale {
    fn as_str(self) -> &'static str {
        match self {
            FeatureScale::Building => "building",
            FeatureScale::Block => "block",
            FeatureScale::City => "city",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureDef {
    pub name: String,
    pub kind: FeatureKind,
    pub scale: FeatureScale,
    pub description: String,
}

impl FeatureDef {
    fn num(name: &str, scale: FeatureScale, description: &str) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Numeric,
            scale,
            description: description.into(),
        }
    }

    fn cat(name: &str, levels: &[&str], scale: FeatureScale, description: &str) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Categorical(levels.iter().map(|s| s.to_string()).collect()),
            scale,
            description: description.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureRegistry {
    pub version: String,
    pub subset: String,
    pub features: Vec<FeatureDef>,
}

/// Lowercase name with runs of non-alphanumerics collapsed to `_`.
pub(crate) fn slug(s: &str) -> String {
    let mut out = String::new();
    for ch in s.chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_end_matches('_').to_string()
}

impl FeatureRegistry {
    pub fn new(version: &str, subset: &str, features: Vec<FeatureDef>) -> Result<Self, FeatureError> {
        let mut seen = std::collections::HashSet::new();
        for f in &features {
            if !seen.insert(f.name.clone()) {
                return Err(FeatureError::DuplicateName(f.name.clone()));
            }
        }
        Ok(Self {
            version: version.into(),
            subset: subset.into(),
            features,
        })
    }

    /// Morphology, neighbourhood, block, location and city features.
    pub fn default_height() -> Self {
        use FeatureScale::*;
        let tiers: Vec<&str> = CityTier::ALL.iter().map(|t| t.as_str()).collect();
        let features = vec![
            FeatureDef::num("area", Building, "Rooftop area (m2)"),
            FeatureDef::num("perimeter", Building, "Rooftop perimeter (m)"),
            FeatureDef::num("vertex_count", Building, "Exterior vertex count"),
            FeatureDef::num("compactness", Building, "4 pi A / P^2"),
            FeatureDef::num("mrr_length", Building, "Minimum rotated rectangle long side (m)"),
            FeatureDef::num("mrr_width", Building, "Minimum rotated rectangle short side (m)"),
            FeatureDef::num("orientation", Building, "Long-side orientation (deg, [0,180))"),
            FeatureDef::num("elongation", Building, "mrr_length / mrr_width"),
            FeatureDef::num("nb_count", Building, "Buildings with centroid within the neighbour radius"),
            FeatureDef::num("nb_mean_dist", Building, "Mean centroid distance to neighbours (m)"),
            FeatureDef::num("nb_nearest_dist", Building, "Nearest neighbour centroid distance (m)"),
            FeatureDef::num("block_area", Block, "Natural block area (m2)"),
            FeatureDef::num("block_building_count", Block, "Buildings in the block"),
            FeatureDef::num("block_coverage", Block, "Rooftop area / block area"),
            FeatureDef::num("block_mean_area", Block, "Mean rooftop area in the block (m2)"),
            FeatureDef::num("street_adjacent", Block, "1 if on the block's street-facing concave hull"),
            FeatureDef::num("dist_to_center", City, "Distance to the nearest POI functional center (m)"),
            FeatureDef::num("dist_to_road", City, "Distance to the nearest road (m)"),
            FeatureDef::num("poi_density_all", City, "Kernel density of all POIs at the centroid"),
            FeatureDef::cat("city_tier", &tiers, City, "Administrative city tier"),
            FeatureDef::cat("climate_zone", &CLIMATE_ZONES, City, "Building climate zone (optional)"),
        ];
        Self::new(REGISTRY_VERSION, "height", features).expect("default names are unique")
    }

    /// The height features plus POI counts/densities and 3-D morphology
    /// derived from predicted heights.
    pub fn default_function() -> Self {
        use FeatureScale::*;
        let mut features = Self::default_height().features;
        for cat in POI_CATEGORIES {
            features.push(FeatureDef::num(
                &format!("poi_count_{}", slug(cat)),
                City,
                &format!("{cat} POIs within the POI radius"),
            ));
        }
        for cat in POI_CATEGORIES {
            features.push(FeatureDef::num(
                &format!("poi_kde_{}", slug(cat)),
                City,
                &format!("{cat} POI kernel density at the centroid"),
            ));
        }
        features.push(FeatureDef::num("pred_height", Building, "Predicted height (m)"));
        features.push(FeatureDef::num("volume", Building, "Rooftop area x predicted height (m3)"));
        features.push(FeatureDef::num("est_floors", Building, "Predicted height / floor height"));
        Self::new(REGISTRY_VERSION, "function", features).expect("default names are unique")
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn to_manifest(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "version {}", self.version);
        let _ = writeln!(s, "subset {}", self.subset);
        for f in &self.features {
            let (kind, levels) = match &f.kind {
                FeatureKind::Numeric => ("numeric", "-".to_string()),
                FeatureKind::Categorical(l) => ("categorical", l.join("|")),
            };
            let _ = writeln!(s, "feature {} {} {} {} {}", f.name, kind, f.scale.as_str(), levels, f.description);
        }
        s
    }

    pub fn parse_manifest(text: &str) -> Result<Self, FeatureError> {
        let err = |line: usize, message: String| FeatureError::Manifest { line, message };
        let (mut version, mut subset) = (None, None);
        let mut features = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.splitn(6, ' ');
            match parts.next() {
                Some("version") => version = parts.next().map(str::to_string),
                Some("subset") => subset = parts.next().map(str::to_string),
                Some("feature") => {
                    let mut next = |what: &str| parts.next().ok_or_else(|| err(no + 1, format!("missing {what}")));
                    let name = next("name")?.to_string();
                    let kind = next("kind")?;
                    let scale = match next("scale")? {
                        "building" => FeatureScale::Building,
                        "block" => FeatureScale::Block,
                        "city" => FeatureScale::City,
                        other => return Err(err(no + 1, format!("unknown scale `{other}`"))),
                    };
                    let levels = next("levels")?;
                    let kind = match kind {
                        "numeric" => FeatureKind::Numeric,
                        "categorical" => FeatureKind::Categorical(levels.split('|').map(str::to_string).collect()),
                        other => return Err(err(no + 1, format!("unknown kind `{other}`"))),
                    };
                    let description = parts.next().unwrap_or("").to_string();
                    features.push(FeatureDef {
                        name,
                        kind,
                        scale,
                        description,
                    });
                }
                Some(other) => return Err(err(no + 1, format!("unknown directive `{other}`"))),
                None => {}
            }
        }
        let version = version.ok_or_else(|| err(1, "missing version".into()))?;
        let subset = subset.ok_or_else(|| err(1, "missing subset".into()))?;
        Self::new(&version, &subset, features)
    }
}

/// Feature rows aligned to a registry. Masked entries hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub registry_version: String,
    pub names: Vec<String>,
    pub building_ids: Vec<String>,
    values: Vec<f64>,
    missing: Vec<bool>,
    /// Human-readable notes, e.g. unknown categorical levels.
    pub flags: Vec<String>,
}

impl FeatureMatrix {
    pub fn empty(registry: &FeatureRegistry) -> Self {
        Self {
            registry_version: registry.version.clone(),
            names: registry.names(),
            building_ids: Vec::new(),
            values: Vec::new(),
            missing: Vec::new(),
            flags: Vec::new(),
        }
    }

    /// Appends a row; `None` entries are masked.
    pub fn push_row(&mut self, id: String, row: &[Option<f64>]) {
        assert_eq!(row.len(), self.names.len(), "row width must equal registry length");
        self.building_ids.push(id);
        for v in row {
            self.values.push(v.unwrap_or(f64::NAN));
            self.missing.push(v.is_none());
        }
    }

    pub fn n_rows(&self) -> usize {
        self.building_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    /// Row values with NaN at masked positions.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols()..(i + 1) * self.n_cols()]
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let k = i * self.n_cols() + j;
        (!self.missing[k]).then_some(self.values[k])
    }

    pub fn is_missing(&self, i: usize, j: usize) -> bool {
        self.missing[i * self.n_cols() + j]
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.names.iter().position(|n| n == name)?;
        Some((0..self.n_rows()).map(|i| self.values[i * self.n_cols() + j]).collect())
    }

    /// Row subset in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut m = FeatureMatrix {
            registry_version: self.registry_version.clone(),
            names: self.names.clone(),
            building_ids: Vec::with_capacity(rows.len()),
            values: Vec::with_capacity(rows.len() * self.n_cols()),
            missing: Vec::with_capacity(rows.len() * self.n_cols()),
            flags: self.flags.clone(),
        };
        let w = self.n_cols();
        for &i in rows {
            m.building_ids.push(self.building_ids[i].clone());
            m.values.extend_from_slice(&self.values[i * w..(i + 1) * w]);
            m.missing.extend_from_slice(&self.missing[i * w..(i + 1) * w]);
        }
        m
    }

    /// CSV with header `building_id,<registry names>`; masked cells are empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str("building_id");
        for n in &self.names {
            s.push(',');
            s.push_str(n);
        }
        s.push('\n');
        for i in 0..self.n_rows() {
            s.push_str(&self.building_ids[i]);
            for j in 0..self.n_cols() {
                s.push(',');
                if let Some(v) = self.get(i, j) {
                    let _ = write!(s, "{v}");
                }
            }
            s.push('\n');
        }
        s
    }

    /// Parses [`FeatureMatrix::to_csv`] output; the header must equal the
    /// registry names.
    pub fn from_csv(text: &str, registry: &FeatureRegistry) -> Result<Self, FeatureError> {
        let err = |line: usize, message: String| FeatureError::Manifest { line, message };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| err(1, "empty feature table".into()))?;
        let expect = std::iter::once("building_id".to_string()).chain(registry.names()).collect::<Vec<_>>().join(",");
        if header != expect {
            return Err(err(1, "header does not match the registry".into()));
        }
        let mut m = FeatureMatrix::empty(registry);
        let mut row = Vec::with_capacity(registry.len());
        for (no, line) in lines.enumerate() {
            let mut cells = line.split(',');
            let id = cells.next().unwrap_or("").to_string();
            row.clear();
            for c in cells {
                row.push(if c.is_empty() {
                    None
                } else {
                    Some(c.parse::<f64>().map_err(|_| err(no + 2, format!("bad value `{c}`")))?)
                });
            }
            if row.len() != registry.len() {
                return Err(err(no + 2, format!("expected {} values, found {}", registry.len(), row.len())));
            }
            m.push_row(id, &row);
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_consistent() {
        let h = FeatureRegistry::default_height();
        let f = FeatureRegistry::default_function();
        assert_eq!(f.len(), h.len() + 38 + 3);
        assert_eq!(&f.features[..h.len()], &h.features[..]);
        assert!(f.position("poi_count_lifestyle_services").is_some());
        assert!(f.position("poi_kde_natural_features").is_some());
    }

    #[test]
    fn manifest_roundtrip() {
        for r in [FeatureRegistry::default_height(), FeatureRegistry::default_function()] {
            assert_eq!(FeatureRegistry::parse_manifest(&r.to_manifest()).unwrap(), r);
        }
        assert!(matches!(
            FeatureRegistry::parse_manifest("version 1\nsubset x\nfeature a numeric building - A\nfeature a numeric city - B\n"),
            Err(FeatureError::DuplicateName(_))
        ));
        assert!(matches!(
            FeatureRegistry::parse_manifest("version 1\nsubset x\nfeature a numeric town - A\n"),
            Err(FeatureError::Manifest { line: 3, .. })
        ));
    }

    #[test]
    fn csv_roundtrip_preserves_mask() {
        let r = FeatureRegistry::new("1", "t", vec![FeatureDef::num("a", FeatureScale::Building, ""), FeatureDef::num("b", FeatureScale::Building, "")]).unwrap();
        let mut m = FeatureMatrix::empty(&r);
        m.push_row("b1".into(), &[Some(0.1), None]);
        m.push_row("b2".into(), &[Some(-3e-7), Some(12.5)]);
        let csv = m.to_csv();
        assert_eq!(csv, "building_id,a,b\nb1,0.1,\nb2,-0.0000003,12.5\n");
        let back = FeatureMatrix::from_csv(&csv, &r).unwrap();
        assert_eq!(back.get(0, 1), None);
        assert!(back.row(0)[1].is_nan());
        assert_eq!(back.get(1, 0), Some(-3e-7));
        assert_eq!(back.to_csv(), csv);
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("Beauty and Wellness"), "beauty_and_wellness");
        assert_eq!(slug("Lifestyle Services"), "lifestyle_services");
    }
}
