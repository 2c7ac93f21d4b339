//! Indicative attributes: function labels from AOI plots, street-view
//! disorder quality (Eqs. 1–2) and impervious-surface construction age.

mod age;
mod function;
mod quality;

pub use age::{age_bin, assign_age, AgeBin, AgeClass, ImperviousStack, GAIA_FIRST, GAIA_LAST};
pub use function::{assign_function_labels, reclass, AoiPlot, FunctionLabel, AOI_PRIMARY_TYPES};
pub use quality::{
    quality_latest, quality_q, quality_t, DisorderTotal, QualityMode, QualityResult, SviLayer, SviObservation,
    DISORDER_TYPES, QUALITY_BUFFER, SVI_FIRST_YEAR, SVI_LAST_YEAR,
};

use crate::grid::GridError;

#[derive(Debug, thiserror::Error)]
pub enum IndicativeError {
    #[error("unknown function label `{0}`")]
    UnknownFunction(String),
    #[error("AOI primary type {0} out of range")]
    BadAoiType(usize),
    #[error("SVI year {0} outside 2014..=2023")]
    BadYear(i32),
    #[error("impervious stack: {0}")]
    BadStack(String),
    #[error("point ({x}, {y}) is outside the impervious stack")]
    OutOfExtent { x: f64, y: f64 },
    #[error("unknown age class `{0}`")]
    UnknownAge(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}
