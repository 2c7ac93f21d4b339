//! Bootstrap-aggregated boosted trees for height regression and function
//! classification, partitioned by city tier, with per-member uncertainty.

mod bagging;
mod data;
mod gbt;
mod metrics;

pub use bagging::{
    bootstrap_sample, derive_seed, grid_search, predict_ensemble, predict_members, train_bagged, train_partitioned,
    vote, BaggedEnsemble, EnsembleConfig, GbtLearner, IterationSplit, Learner, PartitionLabel, PartitionedModel,
    Predictor, SplitPlan, ENSEMBLE_FORMAT,
};
pub use data::Dataset;
pub use gbt::{train_gbt, train_gbt_traced, GbtModel, GbtParams, Node, Objective, Tree};
pub use metrics::{
    cls_metrics, reg_metrics, relative_error, uncertainty, ClassMetrics, ClsMetrics, RegMetrics, UncertaintyBin,
    UncertaintyRecord, UncertaintyReport,
};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum EnsembleError {
    #[error("no training rows")]
    EmptyData,
    #[error("target {0} is not finite")]
    NonFiniteTarget(usize),
    #[error("length mismatch: {rows} rows vs {targets} targets")]
    LengthMismatch { rows: usize, targets: usize },
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("label at row {0} is not a class index in range")]
    BadLabel(usize),
    #[error("feature schema mismatch")]
    SchemaMismatch,
    #[error("need at least {need} values, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("model format: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    Regression,
    Classification { n_classes: usize },
}

impl Task {
    pub fn objective(&self) -> Objective {
        match *self {
            Task::Regression => Objective::SquaredError,
            Task::Classification { n_classes } => Objective::Softmax { n_classes },
        }
    }
}
