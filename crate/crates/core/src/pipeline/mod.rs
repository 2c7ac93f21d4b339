//! Configuration, data I/O, synthetic cities, stage orchestration and the
//! audit HTTP API.

mod audit;
mod config;
mod experiment;
mod geojson;
mod layers;
mod project;
mod records;
mod stages;
mod synth;

pub use audit::{
    agreement_stats, audit_router, match_svi_to_buildings, AgreementStats, Annotation, AuditState, AuditTask,
    PredictedAttrs, LOW_N,
};
pub use config::{PipelineConfig, CONFIG_KEYS};
pub use experiment::{height_experiment, HeightExperiment, TierComparison};
pub use geojson::{features_to_string, load_vector, parse_features, save_vector, Geometry, VectorFeature};
pub use layers::{
    load_admins, load_aois, load_blocks, load_pois, load_reference, load_roads, load_svi, parse_pois, parse_svi,
    write_pois, write_svi, ReferenceBuilding,
};
pub use project::{Aeqd, EARTH_RADIUS};
pub use records::{quality_to_props, BuildingRecord, RECORD_KEYS};
pub use stages::{run_all, run_stage, Stage, StageReport, STAGE_VERSION};
pub use synth::{synth_city, tier_floors, write_city, CityParams, SynthBuilding, SyntheticCity};

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::ensemble::EnsembleError;
use crate::features::FeatureError;
use crate::geom::GeomError;
use crate::grid::GridError;
use crate::indicative::IndicativeError;
use crate::vectorize::VectorizeError;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("config key `{0}` is required by this stage")]
    MissingKey(String),
    #[error("missing artifact {artifact}; run stage `{stage}` first")]
    MissingArtifact { artifact: String, stage: &'static str },
    #[error("{}{message}", feature.map(|i| format!("feature {i}: ")).unwrap_or_default())]
    Vector { feature: Option<usize>, message: String },
    #[error("line {line}: {message}")]
    Table { line: usize, message: String },
    #[error("{path}: {source}")]
    InFile {
        path: String,
        #[source]
        source: Box<PipelineError>,
    },
    #[error("audit: {0}")]
    Audit(String),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Indicative(#[from] IndicativeError),
    #[error(transparent)]
    Vectorize(#[from] VectorizeError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

impl PipelineError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn within(self, path: &Path) -> Self {
        PipelineError::InFile {
            path: path.display().to_string(),
            source: Box::new(self),
        }
    }
}

/// Writes to a sibling temp file, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    std::fs::write(&tmp, bytes).map_err(|e| PipelineError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| PipelineError::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of a file, or of every file under a directory in name order.
pub fn hash_path(path: &Path) -> Result<String, PipelineError> {
    let mut h = Sha256::new();
    if path.is_dir() {
        let mut names: Vec<_> = std::fs::read_dir(path)
            .map_err(|e| PipelineError::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        names.sort();
        for p in names {
            h.update(p.file_name().unwrap().to_string_lossy().as_bytes());
            h.update(std::fs::read(&p).map_err(|e| PipelineError::io(&p, e))?);
        }
    } else {
        h.update(std::fs::read(path).map_err(|e| PipelineError::io(path, e))?);
    }
    Ok(hex::encode(h.finalize()))
}
