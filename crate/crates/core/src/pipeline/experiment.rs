//! Partition vs combination height experiment on a synthetic city, using
//! the true footprints (no rasters).

use super::{PipelineError, SyntheticCity};
use crate::ensemble::{reg_metrics, train_partitioned, Dataset, EnsembleConfig, RegMetrics, Task};
use crate::features::{assemble_feature_matrix, BuildingInput, CityTier, FeatureContext, FeatureParams, FeatureRegistry};

#[derive(Debug, Clone, PartialEq)]
pub struct TierComparison {
    pub tier: CityTier,
    pub partition: RegMetrics,
    pub combination: RegMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeightExperiment {
    pub tiers: Vec<TierComparison>,
    /// Routed partition predictions over the whole test set.
    pub partition: RegMetrics,
    pub combination: RegMetrics,
    pub n_train: usize,
}

impl HeightExperiment {
    /// Tiers where the partition model has the lower MAE.
    pub fn partition_wins(&self) -> usize {
        self.tiers.iter().filter(|t| t.partition.mae < t.combination.mae).count()
    }
}

pub fn height_experiment(city: &SyntheticCity, config: &EnsembleConfig) -> Result<HeightExperiment, PipelineError> {
    let labeled: Vec<_> = city.buildings.iter().filter(|b| b.referenced).collect();
    let inputs: Vec<BuildingInput> = labeled
        .iter()
        .map(|b| BuildingInput {
            id: b.id.clone(),
            polygon: b.polygon.clone(),
            pred_height: None,
        })
        .collect();
    let ctx = FeatureContext {
        blocks: city.blocks.clone(),
        roads: city.roads.clone(),
        pois: city.pois.clone(),
        admins: city.admins.clone(),
        climate_zone: None,
    };
    let params = FeatureParams {
        floor_height: city.params.floor_height,
        ..FeatureParams::default()
    };
    let m = assemble_feature_matrix(&inputs, &ctx, &FeatureRegistry::default_height(), &params)?;
    let y: Vec<f64> = labeled.iter().map(|b| b.floors as f64 * city.params.floor_height).collect();
    let tiers: Vec<CityTier> = labeled.iter().map(|b| b.tier).collect();

    let (test, rest) = config.plan.test_split(labeled.len());
    let ds = Dataset::from_matrix(&m);
    let pick = |idx: &[usize]| -> (Vec<f64>, Vec<CityTier>) { (idx.iter().map(|&i| y[i]).collect(), idx.iter().map(|&i| tiers[i]).collect()) };
    let (y_train, t_train) = pick(&rest);
    let model = train_partitioned(&ds.select(&rest), &y_train, &t_train, Task::Regression, config)?;

    let test_ds = ds.select(&test);
    let (y_test, t_test) = pick(&test);
    let routed = model.predict(&test_ds, &t_test)?;
    let combined: Vec<f64> = (0..test.len()).map(|i| model.combination.predict_row(test_ds.row(i))).collect();
    let mut out = Vec::new();
    for tier in CityTier::ALL {
        let idx: Vec<usize> = (0..test.len()).filter(|&i| t_test[i] == tier).collect();
        if idx.is_empty() {
            continue;
        }
        let ys: Vec<f64> = idx.iter().map(|&i| y_test[i]).collect();
        let sel = |p: &[f64]| idx.iter().map(|&i| p[i]).collect::<Vec<_>>();
        out.push(TierComparison {
            tier,
            partition: reg_metrics(&ys, &sel(&routed))?,
            combination: reg_metrics(&ys, &sel(&combined))?,
        });
    }
    Ok(HeightExperiment {
        tiers: out,
        partition: reg_metrics(&y_test, &routed)?,
        combination: reg_metrics(&y_test, &combined)?,
        n_train: rest.len(),
    })
}
