//! Multi-scale predictor variables for every building: morphology,
//! neighbourhood, block, street adjacency, POI densities, functional-center
//! distance and city tier.
//!
//! Rows are assembled against a [`FeatureRegistry`], a versioned named list of
//! features; the height and function models use two registry subsets.

mod assemble;
mod kde;
mod morphology;
mod neighbors;
mod poi;
mod registry;
mod street;
mod tier;

pub use assemble::{assemble_feature_matrix, BuildingInput, FeatureContext, FeatureParams};
pub use kde::{distance_to_center, functional_centers, kde_at, kde_surface, DensitySurface, GridSpec};
pub use morphology::{min_rotated_rect, morphology_features, Morphology, RotatedRect};
pub use neighbors::{assign_blocks, neighbor_features, BlockAssignment, NeighborStats};
pub use poi::{poi_density_features, Poi, PoiFeatures, POI_CATEGORIES};
pub use registry::{FeatureDef, FeatureKind, FeatureMatrix, FeatureRegistry, FeatureScale, REGISTRY_VERSION};
pub use street::street_adjacency;
pub use tier::{city_tier_assign, AdminArea, CityTier};

use crate::geom::GeomError;

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("point set is empty")]
    EmptyPoints,
    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("grid must be at least 3×3 with positive cell size")]
    BadGrid,
    #[error("registry line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("duplicate feature name `{0}`")]
    DuplicateName(String),
    #[error("registry feature `{0}` is not computed by this version")]
    UnknownFeature(String),
    #[error("unknown city tier `{0}`")]
    UnknownTier(String),
    #[error("POI category {0} out of range")]
    BadCategory(usize),
    #[error(transparent)]
    Geom(#[from] GeomError),
}
