//! Flat `key = value` configuration. `#` starts a comment; unknown or
//! repeated keys are rejected; relative paths resolve against the config
//! file's directory.

use std::path::{Path, PathBuf};

use super::{Aeqd, PipelineError};
use crate::ensemble::{EnsembleConfig, SplitPlan, Task};
use crate::features::FeatureParams;
use crate::vectorize::SeamParams;

/// Every accepted key with its default (`-` = unset).
pub const CONFIG_KEYS: [(&str, &str); 43] = [
    ("seed", "-"),
    ("work_dir", "out"),
    ("origin_lon", "-"),
    ("origin_lat", "-"),
    ("masks_dir", "-"),
    ("truth_masks_dir", "-"),
    ("rooftops", "-"),
    ("reference", "-"),
    ("roads", "-"),
    ("pois", "-"),
    ("aois", "-"),
    ("blocks", "-"),
    ("admins", "-"),
    ("svi", "-"),
    ("impervious_dir", "-"),
    ("images_dir", "-"),
    ("extent", "-"),
    ("tile_size_px", "512"),
    ("pixel_size", "1"),
    ("simplify_tolerance", "0.5"),
    ("min_area", "4"),
    ("seam_buffer", "2"),
    ("edge_similarity", "0.5"),
    ("neighbor_radius", "100"),
    ("poi_radius", "300"),
    ("kde_bandwidth", "300"),
    ("kde_cell", "50"),
    ("alpha", "0.01"),
    ("setback", "100"),
    ("floor_height", "3"),
    ("climate_zone", "-"),
    ("registry_version", "1"),
    ("n_members", "100"),
    ("test_fraction", "0.1"),
    ("val_fraction", "0.2"),
    ("grid_depths", "3,6"),
    ("grid_rounds", "100,300"),
    ("learning_rate", "0.1"),
    ("min_samples", "200"),
    ("quality_buffer", "100"),
    ("svi_match_radius", "100"),
    ("audit_log", "-"),
    ("audit_addr", "127.0.0.1:8080"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    values: Vec<Option<String>>,
    base: PathBuf,
}

fn key_index(key: &str) -> Option<usize> {
    CONFIG_KEYS.iter().position(|(k, _)| *k == key)
}

impl PipelineConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut values: Vec<Option<String>> =
            CONFIG_KEYS.iter().map(|(_, d)| (*d != "-").then(|| d.to_string())).collect();
        let mut seen = vec![false; CONFIG_KEYS.len()];
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| PipelineError::Config { line: i + 1, message };
            let (k, v) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (k, v) = (k.trim(), v.trim());
            let idx = key_index(k).ok_or_else(|| err(format!("unknown key `{k}`")))?;
            if std::mem::replace(&mut seen[idx], true) {
                return Err(err(format!("key `{k}` set twice")));
            }
            values[idx] = Some(v.to_string());
        }
        let cfg = Self {
            values,
            base: base.to_path_buf(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base).map_err(|e| e.within(path))
    }

    /// All set keys, one per line, in key order.
    pub fn to_text(&self) -> String {
        CONFIG_KEYS
            .iter()
            .zip(&self.values)
            .filter_map(|((k, _), v)| v.as_ref().map(|v| format!("{k} = {v}\n")))
            .collect()
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        let idx = key_index(key).ok_or_else(|| PipelineError::Config {
            line: 0,
            message: format!("unknown key `{key}`"),
        })?;
        self.values[idx] = Some(value.to_string());
        self.validate()
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values[key_index(key).expect("known key")].as_deref()
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, PipelineError> {
        self.raw(key)
            .map(|v| {
                v.parse::<T>().map_err(|_| PipelineError::Config {
                    line: 0,
                    message: format!("`{key}`: cannot parse `{v}`"),
                })
            })
            .transpose()
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, PipelineError> {
        let v = self.raw(key).unwrap_or("");
        v.split(',')
            .map(|s| {
                s.trim().parse::<T>().map_err(|_| PipelineError::Config {
                    line: 0,
                    message: format!("`{key}`: cannot parse `{v}`"),
                })
            })
            .collect()
    }

    fn f(&self, key: &str) -> f64 {
        self.num::<f64>(key).ok().flatten().expect("validated")
    }

    fn validate(&self) -> Result<(), PipelineError> {
        for (k, d) in CONFIG_KEYS {
            let numeric = d.parse::<f64>().is_ok() || matches!(k, "origin_lon" | "origin_lat");
            if numeric {
                self.num::<f64>(k)?;
            }
        }
        self.num::<u64>("seed")?;
        self.num::<usize>("tile_size_px")?;
        self.num::<usize>("n_members")?;
        self.num::<usize>("min_samples")?;
        self.list::<usize>("grid_depths")?;
        self.list::<usize>("grid_rounds")?;
        if self.raw("extent").is_some() {
            let e = self.list::<f64>("extent")?;
            if e.len() != 4 || e[2] <= e[0] || e[3] <= e[1] {
                return Err(PipelineError::Config {
                    line: 0,
                    message: "`extent` must be min_x,min_y,max_x,max_y".into(),
                });
            }
        }
        Ok(())
    }

    pub fn seed(&self) -> Result<u64, PipelineError> {
        self.num::<u64>("seed")?.ok_or_else(|| PipelineError::MissingKey("seed".into()))
    }

    pub fn projection(&self) -> Result<Aeqd, PipelineError> {
        match (self.num::<f64>("origin_lon")?, self.num::<f64>("origin_lat")?) {
            (Some(lon), Some(lat)) => Ok(Aeqd::new(lon, lat)),
            (None, _) => Err(PipelineError::MissingKey("origin_lon".into())),
            _ => Err(PipelineError::MissingKey("origin_lat".into())),
        }
    }

    /// A configured path, resolved against the config directory.
    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(|v| self.base.join(v))
    }

    pub fn require_path(&self, key: &str) -> Result<PathBuf, PipelineError> {
        let p = self.path(key).ok_or_else(|| PipelineError::MissingKey(key.into()))?;
        if !p.exists() {
            return Err(PipelineError::io(&p, std::io::Error::new(std::io::ErrorKind::NotFound, "configured path does not exist")));
        }
        Ok(p)
    }

    /// Every configured input path must exist.
    pub fn check_paths(&self) -> Result<(), PipelineError> {
        for key in [
            "masks_dir",
            "truth_masks_dir",
            "reference",
            "roads",
            "pois",
            "aois",
            "blocks",
            "admins",
            "svi",
            "impervious_dir",
            "images_dir",
        ] {
            if self.raw(key).is_some() {
                self.require_path(key)?;
            }
        }
        Ok(())
    }

    pub fn work_dir(&self) -> PathBuf {
        self.path("work_dir").expect("has default")
    }

    pub fn extent(&self) -> Result<crate::geom::BBox, PipelineError> {
        if self.raw("extent").is_none() {
            return Err(PipelineError::MissingKey("extent".into()));
        }
        let e = self.list::<f64>("extent")?;
        Ok(crate::geom::BBox::new(e[0], e[1], e[2], e[3]))
    }

    pub fn tile_size_px(&self) -> usize {
        self.num("tile_size_px").ok().flatten().expect("validated")
    }

    pub fn pixel_size(&self) -> f64 {
        self.f("pixel_size")
    }

    pub fn simplify_tolerance(&self) -> f64 {
        self.f("simplify_tolerance")
    }

    pub fn min_area(&self) -> f64 {
        self.f("min_area")
    }

    pub fn seam_params(&self) -> SeamParams {
        SeamParams {
            seam_buffer: self.f("seam_buffer"),
            edge_similarity: self.f("edge_similarity"),
        }
    }

    pub fn feature_params(&self) -> FeatureParams {
        FeatureParams {
            neighbor_radius: self.f("neighbor_radius"),
            poi_radius: self.f("poi_radius"),
            kde_bandwidth: self.f("kde_bandwidth"),
            kde_cell: self.f("kde_cell"),
            alpha: self.f("alpha"),
            setback: self.f("setback"),
            floor_height: self.f("floor_height"),
        }
    }

    pub fn floor_height(&self) -> f64 {
        self.f("floor_height")
    }

    pub fn quality_buffer(&self) -> f64 {
        self.f("quality_buffer")
    }

    pub fn svi_match_radius(&self) -> f64 {
        self.f("svi_match_radius")
    }

    pub fn ensemble_config(&self, task: Task) -> Result<EnsembleConfig, PipelineError> {
        let plan = SplitPlan {
            test_fraction: self.f("test_fraction"),
            val_fraction: self.f("val_fraction"),
            iterations: self.num("n_members")?.expect("default"),
            master_seed: self.seed()?,
        };
        Ok(EnsembleConfig {
            plan,
            grid: EnsembleConfig::grid(task, &self.list("grid_depths")?, &self.list("grid_rounds")?, self.f("learning_rate")),
            min_samples: self.num("min_samples")?.expect("default"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let c = PipelineConfig::parse("seed = 7\norigin_lon = 114\norigin_lat=30 # comment\nn_members = 5\n", Path::new("/d")).unwrap();
        assert_eq!(c.seed().unwrap(), 7);
        assert_eq!(c.work_dir(), PathBuf::from("/d/out"));
        let e = c.ensemble_config(Task::Regression).unwrap();
        assert_eq!(e.plan.iterations, 5);
        assert_eq!(e.grid.len(), 4);
        assert_eq!(c.feature_params(), FeatureParams::default());
        let again = PipelineConfig::parse(&c.to_text(), Path::new("/d")).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejections() {
        let base = Path::new(".");
        assert!(matches!(PipelineConfig::parse("sede = 1", base), Err(PipelineError::Config { line: 1, .. })));
        assert!(matches!(PipelineConfig::parse("seed = 1\nseed = 2", base), Err(PipelineError::Config { line: 2, .. })));
        assert!(PipelineConfig::parse("seed = x", base).is_err());
        assert!(PipelineConfig::parse("no equals", base).is_err());
        assert!(PipelineConfig::parse("extent = 1,2,0,5", base).is_err());
        let c = PipelineConfig::parse("", base).unwrap();
        assert!(matches!(c.seed(), Err(PipelineError::MissingKey(_))));
        let c = PipelineConfig::parse("pois = /definitely/missing.csv", base).unwrap();
        assert!(c.check_paths().is_err());
    }
}
