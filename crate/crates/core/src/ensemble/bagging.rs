//! Bagging: per-member seeded splits and bootstraps over one grid-searched
//! parameter set, mean/vote aggregation, and per-tier partition models.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gbt::argmax;
use super::{cls_metrics, train_gbt_traced, Dataset, EnsembleError, GbtModel, GbtParams, Objective, Task};
use crate::features::CityTier;

pub const ENSEMBLE_FORMAT: &str = "geoattrib-ensemble/1";

/// splitmix64 of `master` advanced `j + 1` steps.
pub fn derive_seed(master: u64, j: u64) -> u64 {
    let mut z = master.wrapping_add(j.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// |ids| draws with replacement.
pub fn bootstrap_sample(ids: &[usize], seed: u64) -> Result<Vec<usize>, EnsembleError> {
    if ids.is_empty() {
        return Err(EnsembleError::EmptyData);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..ids.len()).map(|_| ids[rng.gen_range(0..ids.len())]).collect())
}

/// Shuffles `ids` and takes round(frac·n) of them (at least 1, leaving at
/// least 1) as the first part. Both parts come back sorted.
fn shuffle_split(ids: &[usize], frac: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut v = ids.to_vec();
    v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = v.len();
    let k = if n < 2 { 0 } else { ((frac * n as f64).round() as usize).clamp(1, n - 1) };
    let mut rest = v.split_off(k);
    v.sort_unstable();
    rest.sort_unstable();
    (v, rest)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub test_fraction: f64,
    /// Validation share of the non-test rows, per iteration.
    pub val_fraction: f64,
    /// Member count N.
    pub iterations: usize,
    pub master_seed: u64,
}

impl Default for SplitPlan {
    fn default() -> Self {
        Self {
            test_fraction: 0.1,
            val_fraction: 0.2,
            iterations: 100,
            master_seed: 0,
        }
    }
}

impl SplitPlan {
    /// Fixed held-out test rows and the remainder, over rows 0..n.
    pub fn test_split(&self, n: usize) -> (Vec<usize>, Vec<usize>) {
        let ids: Vec<usize> = (0..n).collect();
        shuffle_split(&ids, self.test_fraction, derive_seed(self.master_seed, u64::MAX - 1))
    }

    /// Iteration j's train/validation split of `rest`.
    pub fn iteration(&self, j: usize, rest: &[usize]) -> IterationSplit {
        let (val, train) = shuffle_split(rest, self.val_fraction, derive_seed(self.member_seed(j), 0));
        IterationSplit { train, val }
    }

    pub fn member_seed(&self, j: usize) -> u64 {
        derive_seed(self.master_seed, j as u64)
    }

    /// The split used once per ensemble for grid search.
    pub fn search_split(&self, rest: &[usize]) -> IterationSplit {
        let (val, train) = shuffle_split(rest, self.val_fraction, derive_seed(self.master_seed, u64::MAX));
        IterationSplit { train, val }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub plan: SplitPlan,
    pub grid: Vec<GbtParams>,
    /// Smallest tier that gets its own partition model.
    pub min_samples: usize,
}

impl EnsembleConfig {
    /// max_depth {3, 6} × rounds {100, 300}, η 0.1, no subsampling; λ = 0 for
    /// regression and 1 for classification.
    pub fn default_for(task: Task) -> Self {
        Self {
            plan: SplitPlan::default(),
            grid: Self::grid(task, &[3, 6], &[100, 300], 0.1),
            min_samples: 200,
        }
    }

    pub fn grid(task: Task, depths: &[usize], rounds: &[usize], learning_rate: f64) -> Vec<GbtParams> {
        let lambda = match task {
            Task::Regression => 0.0,
            Task::Classification { .. } => 1.0,
        };
        let mut g = Vec::new();
        for &max_depth in depths {
            for &r in rounds {
                g.push(GbtParams {
                    max_depth,
                    rounds: r,
                    learning_rate,
                    lambda,
                    ..GbtParams::default()
                });
            }
        }
        g
    }
}

/// Single-row prediction: a regression value or a class index.
pub trait Predictor {
    fn predict_value(&self, row: &[f64]) -> f64;
}

/// A trainable base learner; `weights` are bootstrap multiplicities.
pub trait Learner: Sync {
    type Model: Predictor + Send;
    fn fit(&self, ds: &Dataset, y: &[f64], weights: &[f64], seed: u64) -> Result<Self::Model, EnsembleError>;
}

impl Predictor for GbtModel {
    fn predict_value(&self, row: &[f64]) -> f64 {
        GbtModel::predict_value(self, row)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GbtLearner {
    pub params: GbtParams,
    pub objective: Objective,
}

impl Learner for GbtLearner {
    type Model = GbtModel;
    fn fit(&self, ds: &Dataset, y: &[f64], weights: &[f64], seed: u64) -> Result<GbtModel, EnsembleError> {
        train_gbt_traced(ds, y, weights, &self.params, self.objective, seed).map(|(m, _)| m)
    }
}

fn weights_of(n: usize, rows: &[usize]) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for &r in rows {
        w[r] += 1.0;
    }
    w
}

/// Validation MAE (regression) or macro-F1 (classification) on `rows`.
fn score<P: Predictor>(m: &P, ds: &Dataset, y: &[f64], rows: &[usize], task: Task) -> Result<f64, EnsembleError> {
    let pred: Vec<f64> = rows.iter().map(|&r| m.predict_value(ds.row(r))).collect();
    let truth: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
    match task {
        Task::Regression => {
            if truth.is_empty() {
                return Err(EnsembleError::TooFew { need: 1, got: 0 });
            }
            Ok(truth.iter().zip(&pred).map(|(a, b)| (a - b).abs()).sum::<f64>() / truth.len() as f64)
        }
        Task::Classification { n_classes } => {
            let t: Vec<usize> = truth.iter().map(|&v| v as usize).collect();
            let p: Vec<usize> = pred.iter().map(|&v| v as usize).collect();
            Ok(cls_metrics(&t, &p, n_classes)?.macro_f1)
        }
    }
}

fn better(task: Task, a: f64, b: f64) -> bool {
    match task {
        Task::Regression => a < b,
        Task::Classification { .. } => a > b,
    }
}

/// Best grid entry on `split` (ties → first) and every entry's score.
pub fn grid_search(
    ds: &Dataset,
    y: &[f64],
    task: Task,
    grid: &[GbtParams],
    split: &IterationSplit,
    seed: u64,
) -> Result<(GbtParams, Vec<f64>), EnsembleError> {
    if grid.is_empty() {
        return Err(EnsembleError::BadParams("empty grid".into()));
    }
    if grid.len() == 1 {
        return Ok((grid[0], Vec::new()));
    }
    let w = weights_of(ds.n_rows(), &split.train);
    let scores = grid
        .par_iter()
        .map(|p| {
            let m = GbtLearner {
                params: *p,
                objective: task.objective(),
            }
            .fit(ds, y, &w, seed)?;
            score(&m, ds, y, &split.val, task)
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if better(task, s, scores[best]) {
            best = i;
        }
    }
    Ok((grid[best], scores))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartitionLabel {
    Tier(CityTier),
    Combined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaggedEnsemble {
    pub format: String,
    pub task: Task,
    pub partition_label: PartitionLabel,
    pub feature_names: Vec<String>,
    pub params: GbtParams,
    /// Grid-search score per grid entry (empty for a single-entry grid).
    pub grid_scores: Vec<f64>,
    pub member_seeds: Vec<u64>,
    /// Per-member validation MAE or macro-F1 on its own split.
    pub member_val_scores: Vec<f64>,
    pub members: Vec<GbtModel>,
}

impl BaggedEnsemble {
    pub fn member_predictions(&self, row: &[f64]) -> Vec<f64> {
        self.members.iter().map(|m| m.predict_value(row)).collect()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let p = self.member_predictions(row);
        match self.task {
            Task::Regression => p.iter().sum::<f64>() / p.len() as f64,
            Task::Classification { n_classes } => vote(&p, n_classes) as f64,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ensemble serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, EnsembleError> {
        let e: Self = serde_json::from_str(s).map_err(|err| EnsembleError::Format(err.to_string()))?;
        if e.format != ENSEMBLE_FORMAT {
            return Err(EnsembleError::Format(format!("unsupported format `{}`", e.format)));
        }
        Ok(e)
    }

    fn check_schema(&self, ds: &Dataset) -> Result<(), EnsembleError> {
        if ds.names != self.feature_names {
            return Err(EnsembleError::SchemaMismatch);
        }
        Ok(())
    }
}

/// Majority vote over class indices; ties → lowest class.
pub fn vote(classes: &[f64], n_classes: usize) -> usize {
    let mut counts = vec![0.0; n_classes];
    for &c in classes {
        counts[c as usize] += 1.0;
    }
    argmax(&counts)
}

/// Trains `config.plan.iterations` members on all rows of `ds` (test rows
/// must already be removed). One grid search picks shared parameters; member
/// j then takes its own train/val split and a bootstrap of its train rows.
pub fn train_bagged(ds: &Dataset, y: &[f64], task: Task, config: &EnsembleConfig) -> Result<BaggedEnsemble, EnsembleError> {
    let plan = &config.plan;
    if plan.iterations == 0 || !(0.0..1.0).contains(&plan.val_fraction) {
        return Err(EnsembleError::BadParams(format!("{plan:?}")));
    }
    if y.len() != ds.n_rows() {
        return Err(EnsembleError::LengthMismatch {
            rows: ds.n_rows(),
            targets: y.len(),
        });
    }
    if ds.n_rows() < 2 {
        return Err(EnsembleError::TooFew { need: 2, got: ds.n_rows() });
    }
    let all: Vec<usize> = (0..ds.n_rows()).collect();
    let search_seed = derive_seed(plan.master_seed, u64::MAX);
    let (params, grid_scores) = grid_search(ds, y, task, &config.grid, &plan.search_split(&all), search_seed)?;
    let learner = GbtLearner {
        params,
        objective: task.objective(),
    };
    let member_seeds: Vec<u64> = (0..plan.iterations).map(|j| plan.member_seed(j)).collect();
    let trained = member_seeds
        .par_iter()
        .enumerate()
        .map(|(j, &seed)| {
            let split = plan.iteration(j, &all);
            let boot = bootstrap_sample(&split.train, seed)?;
            let m = learner.fit(ds, y, &weights_of(ds.n_rows(), &boot), seed)?;
            let s = score(&m, ds, y, &split.val, task)?;
            Ok((m, s))
        })
        .collect::<Result<Vec<_>, EnsembleError>>()?;
    let (members, member_val_scores) = trained.into_iter().unzip();
    Ok(BaggedEnsemble {
        format: ENSEMBLE_FORMAT.into(),
        task,
        partition_label: PartitionLabel::Combined,
        feature_names: ds.names.clone(),
        params,
        grid_scores,
        member_seeds,
        member_val_scores,
        members,
    })
}

/// Per-row member predictions, `[row][member]`.
pub fn predict_members(e: &BaggedEnsemble, ds: &Dataset) -> Result<Vec<Vec<f64>>, EnsembleError> {
    e.check_schema(ds)?;
    Ok((0..ds.n_rows()).into_par_iter().map(|i| e.member_predictions(ds.row(i))).collect())
}

/// Mean (regression) or majority vote (classification) per row.
pub fn predict_ensemble(e: &BaggedEnsemble, ds: &Dataset) -> Result<Vec<f64>, EnsembleError> {
    e.check_schema(ds)?;
    Ok((0..ds.n_rows()).into_par_iter().map(|i| e.predict_row(ds.row(i))).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionedModel {
    pub combination: BaggedEnsemble,
    /// One slot per tier in [`CityTier::ALL`] order; `None` = falls back.
    pub partitions: Vec<(CityTier, Option<BaggedEnsemble>)>,
    /// Tiers with fewer than `min_samples` rows.
    pub fallback: Vec<CityTier>,
}

impl PartitionedModel {
    pub fn route(&self, tier: CityTier) -> &BaggedEnsemble {
        self.partitions
            .iter()
            .find(|(t, _)| *t == tier)
            .and_then(|(_, e)| e.as_ref())
            .unwrap_or(&self.combination)
    }

    /// Routes each row by its tier.
    pub fn predict(&self, ds: &Dataset, tiers: &[CityTier]) -> Result<Vec<f64>, EnsembleError> {
        self.combination.check_schema(ds)?;
        if tiers.len() != ds.n_rows() {
            return Err(EnsembleError::LengthMismatch {
                rows: ds.n_rows(),
                targets: tiers.len(),
            });
        }
        Ok((0..ds.n_rows()).into_par_iter().map(|i| self.route(tiers[i]).predict_row(ds.row(i))).collect())
    }
}

/// One ensemble per tier with ≥ `min_samples` rows, trained on that tier's
/// rows only, plus a combination ensemble on all rows. All share the config
/// (and so the master seed).
pub fn train_partitioned(
    ds: &Dataset,
    y: &[f64],
    tiers: &[CityTier],
    task: Task,
    config: &EnsembleConfig,
) -> Result<PartitionedModel, EnsembleError> {
    if tiers.len() != ds.n_rows() {
        return Err(EnsembleError::LengthMismatch {
            rows: ds.n_rows(),
            targets: tiers.len(),
        });
    }
    let combination = train_bagged(ds, y, task, config)?;
    let mut partitions = Vec::new();
    let mut fallback = Vec::new();
    for tier in CityTier::ALL {
        let rows: Vec<usize> = (0..ds.n_rows()).filter(|&i| tiers[i] == tier).collect();
        if rows.len() < config.min_samples.max(2) {
            fallback.push(tier);
            partitions.push((tier, None));
            continue;
        }
        let sub = ds.select(&rows);
        let ys: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
        let mut e = train_bagged(&sub, &ys, task, config)?;
        e.partition_label = PartitionLabel::Tier(tier);
        partitions.push((tier, Some(e)));
    }
    Ok(PartitionedModel {
        combination,
        partitions,
        fallback,
    })
}
