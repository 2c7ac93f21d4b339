//! Stage orchestration. Each stage reads configured inputs and upstream
//! artifacts from the work directory, writes its outputs atomically and
//! leaves a `<stage>.report.json` with provenance.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    features_to_string, hash_path, load_admins, load_aois, load_blocks, load_pois, load_reference, load_roads, load_svi,
    load_vector, sha256_hex, write_atomic, Aeqd, BuildingRecord, Geometry, PipelineConfig, PipelineError,
    ReferenceBuilding, VectorFeature,
};
use crate::ensemble::{
    cls_metrics, reg_metrics, train_bagged, train_partitioned, uncertainty, vote, BaggedEnsemble, Dataset, EnsembleError,
    PartitionedModel, Task,
};
use crate::features::{
    assemble_feature_matrix, city_tier_assign, BuildingInput, CityTier, FeatureContext, FeatureMatrix, FeatureRegistry,
    REGISTRY_VERSION,
};
use crate::geom::{Point, Polygon, SpatialIndex};
use crate::indicative::{
    age_bin, assign_age, assign_function_labels, quality_latest, AgeClass, FunctionLabel, ImperviousStack,
    IndicativeError, QualityMode, QualityResult, SviLayer,
};
use crate::vectorize::{
    repair_seams, seg_confusion, seg_metrics, segment_grid, tile_extent, MaskFileSegmenter, SegConfusion, Segmenter,
    TileRequest,
};

pub const STAGE_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Vectorize,
    Features,
    TrainHeight,
    PredictHeight,
    TrainFunction,
    PredictFunction,
    Quality,
    Age,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Vectorize,
        Stage::Features,
        Stage::TrainHeight,
        Stage::PredictHeight,
        Stage::TrainFunction,
        Stage::PredictFunction,
        Stage::Quality,
        Stage::Age,
        Stage::Evaluate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Vectorize => "vectorize",
            Stage::Features => "features",
            Stage::TrainHeight => "train-height",
            Stage::PredictHeight => "predict-height",
            Stage::TrainFunction => "train-function",
            Stage::PredictFunction => "predict-function",
            Stage::Quality => "quality",
            Stage::Age => "age",
            Stage::Evaluate => "evaluate",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = PipelineError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL.into_iter().find(|st| st.as_str() == s).ok_or_else(|| PipelineError::Config {
            line: 0,
            message: format!("unknown stage `{s}`"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub stage_version: String,
    pub seed: u64,
    pub config_hash: String,
    /// SHA-256 per input file or directory.
    pub inputs: BTreeMap<String, String>,
    /// SHA-256 per output artifact (work-dir relative).
    pub outputs: BTreeMap<String, String>,
    pub wall_time_s: f64,
}

struct Ctx<'a> {
    cfg: &'a PipelineConfig,
    proj: Aeqd,
    work: PathBuf,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl Ctx<'_> {
    fn note(&mut self, name: &str, path: &Path) -> Result<(), PipelineError> {
        let h = hash_path(path)?;
        self.inputs.insert(name.into(), h);
        Ok(())
    }

    /// An upstream artifact produced by `stage`.
    fn artifact(&mut self, name: &str, stage: Stage) -> Result<PathBuf, PipelineError> {
        let p = self.work.join(name);
        if !p.exists() {
            return Err(PipelineError::MissingArtifact {
                artifact: p.display().to_string(),
                stage: stage.as_str(),
            });
        }
        self.note(name, &p)?;
        Ok(p)
    }

    fn input(&mut self, key: &str) -> Result<PathBuf, PipelineError> {
        let p = self.cfg.require_path(key)?;
        self.note(key, &p)?;
        Ok(p)
    }

    fn optional_input(&mut self, key: &str) -> Result<Option<PathBuf>, PipelineError> {
        match self.cfg.raw(key) {
            Some(_) => self.input(key).map(Some),
            None => Ok(None),
        }
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        write_atomic(&self.work.join(name), bytes)?;
        self.outputs.insert(name.into(), sha256_hex(bytes));
        Ok(())
    }

    fn read(&mut self, name: &str, stage: Stage) -> Result<String, PipelineError> {
        let p = self.artifact(name, stage)?;
        std::fs::read_to_string(&p).map_err(|e| PipelineError::io(&p, e))
    }
}

/// Runs one stage and writes its report.
pub fn run_stage(cfg: &PipelineConfig, stage: Stage) -> Result<StageReport, PipelineError> {
    let start = Instant::now();
    let seed = cfg.seed()?;
    cfg.check_paths()?;
    if cfg.raw("registry_version") != Some(REGISTRY_VERSION) {
        return Err(PipelineError::Config {
            line: 0,
            message: format!("registry_version must be {REGISTRY_VERSION}"),
        });
    }
    let mut ctx = Ctx {
        cfg,
        proj: cfg.projection()?,
        work: cfg.work_dir(),
        inputs: BTreeMap::new(),
        outputs: BTreeMap::new(),
    };
    match stage {
        Stage::Vectorize => vectorize(&mut ctx),
        Stage::Features => features(&mut ctx),
        Stage::TrainHeight => train_height(&mut ctx),
        Stage::PredictHeight => predict_height(&mut ctx),
        Stage::TrainFunction => train_function(&mut ctx),
        Stage::PredictFunction => predict_function(&mut ctx),
        Stage::Quality => quality(&mut ctx),
        Stage::Age => age(&mut ctx),
        Stage::Evaluate => evaluate(&mut ctx),
    }?;
    let report = StageReport {
        stage: stage.as_str().into(),
        stage_version: STAGE_VERSION.into(),
        seed,
        config_hash: sha256_hex(cfg.to_text().as_bytes()),
        inputs: ctx.inputs,
        outputs: ctx.outputs,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    write_atomic(&ctx.work.join(format!("{stage}.report.json")), text.as_bytes())?;
    Ok(report)
}

/// Every stage in order.
pub fn run_all(cfg: &PipelineConfig) -> Result<Vec<StageReport>, PipelineError> {
    Stage::ALL.into_iter().map(|s| run_stage(cfg, s)).collect()
}

fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

/// Rows keyed by the first column, checked against `ids`.
fn read_table(text: &str, ids: &[String], what: &str) -> Result<Vec<Vec<String>>, PipelineError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<Vec<String>> = rdr
        .records()
        .enumerate()
        .map(|(i, r)| {
            r.map(|r| r.iter().map(str::to_string).collect()).map_err(|e| PipelineError::Table {
                line: i + 2,
                message: e.to_string(),
            })
        })
        .collect::<Result<_, _>>()?;
    if rows.len() != ids.len() || rows.iter().zip(ids).any(|(r, id)| r.first() != Some(id)) {
        return Err(PipelineError::Table {
            line: 1,
            message: format!("{what} does not match the current rooftops; rerun its stage"),
        });
    }
    Ok(rows)
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn parse_cell(s: &str, line: usize) -> Result<Option<f64>, PipelineError> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| PipelineError::Table {
        line,
        message: format!("bad number `{s}`"),
    })
}

struct Rooftops {
    ids: Vec<String>,
    polygons: Vec<Polygon>,
    centroids: Vec<Point>,
}

fn rooftops(ctx: &mut Ctx) -> Result<Rooftops, PipelineError> {
    let p = ctx.artifact("rooftops.geojson", Stage::Vectorize)?;
    let feats = load_vector(&p, &ctx.proj)?;
    let mut r = Rooftops {
        ids: Vec::new(),
        polygons: Vec::new(),
        centroids: Vec::new(),
    };
    for (i, f) in feats.into_iter().enumerate() {
        let poly = f.polygon().cloned().ok_or_else(|| {
            PipelineError::Vector {
                feature: Some(i),
                message: "expected a Polygon".into(),
            }
            .within(&p)
        })?;
        r.ids.push(f.str_prop("id").map(str::to_string).unwrap_or_else(|| format!("b{i:06}")));
        r.centroids.push(poly.centroid());
        r.polygons.push(poly);
    }
    Ok(r)
}

fn vectorize(ctx: &mut Ctx) -> Result<(), PipelineError> {
    let cfg = ctx.cfg;
    let polys: Vec<Polygon> = if let Some(p) = ctx.optional_input("rooftops")? {
        load_vector(&p, &ctx.proj)?
            .iter()
            .enumerate()
            .map(|(i, f)| {
                f.polygon().cloned().ok_or_else(|| {
                    PipelineError::Vector {
                        feature: Some(i),
                        message: "expected a Polygon".into(),
                    }
                    .within(&p)
                })
            })
            .collect::<Result<_, _>>()?
    } else {
        let dir = ctx.input("masks_dir")?;
        let grid = tile_extent(&cfg.extent()?, cfg.tile_size_px(), cfg.pixel_size())?;
        let tiled = segment_grid(&grid, &MaskFileSegmenter { dir }, cfg.simplify_tolerance())?;
        repair_seams(&tiled, &grid, cfg.seam_params())?.into_iter().map(|t| t.polygon).collect()
    };
    let feats: Vec<VectorFeature> = polys
        .into_iter()
        .filter(|p| p.area() >= cfg.min_area())
        .enumerate()
        .map(|(n, p)| VectorFeature::new(Geometry::Polygon(p)).with("id", format!("b{n:06}")))
        .collect();
    let text = features_to_string(&feats, &ctx.proj);
    ctx.write("rooftops.geojson", text.as_bytes())
}

fn context_layers(ctx: &mut Ctx) -> Result<FeatureContext, PipelineError> {
    let proj = ctx.proj;
    Ok(FeatureContext {
        blocks: ctx.optional_input("blocks")?.map(|p| load_blocks(&p, &proj)).transpose()?.unwrap_or_default(),
        roads: ctx.optional_input("roads")?.map(|p| load_roads(&p, &proj)).transpose()?.unwrap_or_default(),
        pois: ctx.optional_input("pois")?.map(|p| load_pois(&p, &proj)).transpose()?.unwrap_or_default(),
        admins: ctx.optional_input("admins")?.map(|p| load_admins(&p, &proj)).transpose()?.unwrap_or_default(),
        climate_zone: ctx.cfg.raw("climate_zone").map(str::to_string),
    })
}

fn features(ctx: &mut Ctx) -> Result<(), PipelineError> {
    let roofs = rooftops(ctx)?;
    let fctx = context_layers(ctx)?;
    let reg = FeatureRegistry::default_height();
    let inputs: Vec<BuildingInput> = roofs
        .ids
        .iter()
        .zip(&roofs.polygons)
        .map(|(id, p)| BuildingInput {
            id: id.clone(),
            polygon: p.clone(),
            pred_height: None,
        })
        .collect();
    let m = assemble_feature_matrix(&inputs, &fctx, &reg, &ctx.cfg.feature_params())?;
    ctx.write("registry_height.txt", reg.to_manifest().as_bytes())?;
    ctx.write("features_height.csv", m.to_csv().as_bytes())?;
    let rows = roofs.ids.iter().zip(&roofs.centroids).map(|(id, c)| {
        let (tier, admin) = city_tier_assign(c, &fctx.admins);
        vec![id.clone(), tier.as_str().into(), admin.map(|a| a.city_id.clone()).unwrap_or_default()]
    });
    ctx.write("context.csv", &table(&["building_id", "tier", "city_id"], rows))
}

fn load_matrix(ctx: &mut Ctx, name: &str, stage: Stage) -> Result<FeatureMatrix, PipelineError> {
    let reg_name = name.replace("features_", "registry_").replace(".csv", ".txt");
    let reg = FeatureRegistry::parse_manifest(&ctx.read(&reg_name, stage)?)?;
    Ok(FeatureMatrix::from_csv(&ctx.read(name, stage)?, &reg)?)
}

fn load_context(ctx: &mut Ctx, ids: &[String]) -> Result<Vec<(CityTier, Option<String>)>, PipelineError> {
    let text = ctx.read("context.csv", Stage::Features)?;
    read_table(&text, ids, "context.csv")?
        .into_iter()
        .map(|r| Ok((r[1].parse::<CityTier>()?, Some(r[2].clone()).filter(|s| !s.is_empty()))))
        .collect()
}

/// Index of the first reference footprint containing each centroid.
fn match_reference(centroids: &[Point], reference: &[ReferenceBuilding]) -> Vec<Option<usize>> {
    let index = SpatialIndex::build(reference.iter().enumerate().map(|(i, r)| (i, r.polygon.bbox())));
    centroids
        .iter()
        .map(|c| index.query_point(c).into_iter().find(|&i| reference[i].polygon.contains(c)))
        .collect()
}

fn json_artifact(ctx: &mut Ctx, name: &str, stage: Stage) -> Result<Value, PipelineError> {
    serde_json::from_str(&ctx.read(name, stage)?).map_err(|e| PipelineError::Table {
        line: e.line(),
        message: format!("{name}: {e}"),
    })
}

fn usizes(v: &Value) -> Vec<usize> {
    v.as_array().map(|a| a.iter().filter_map(|x| x.as_u64().map(|x| x as usize)).collect()).unwrap_or_default()
}

fn f64s(v: &Value) -> Vec<f64> {
    v.as_array().map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default()
}

fn train_height(ctx: &mut Ctx) -> Result<(), PipelineError> {
    let roofs = rooftops(ctx)?;
    let m = load_matrix(ctx, "features_height.csv", Stage::Features)?;
    let tiers = load_context(ctx, &roofs.ids)?;
    let reference = load_reference(&ctx.input("reference")?, &ctx.proj)?;
    let fh = ctx.cfg.floor_height();
    let labels: Vec<Option<f64>> = match_reference(&roofs.centroids, &reference)
        .into_iter()
        .map(|r| r.and_then(|i| reference[i].floors).filter(|f| *f > 0.0).map(|f| f * fh))
        .collect();
    let labeled: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_some()).collect();
    let config = ctx.cfg.ensemble_config(Task::Regression)?;
    let (test, rest) = config.plan.test_split(labeled.len());
    let train_rows: Vec<usize> = rest.iter().map(|&k| labeled[k]).collect();
    let ds = Dataset::from_matrix(&m.select_rows(&train_rows));
    let y: Vec<f64> = train_rows.iter().map(|&i| labels[i].unwrap()).collect();
    let t: Vec<CityTier> = train_rows.iter().map(|&i| tiers[i].0).collect();
    let model = train_partitioned(&ds, &y, &t, Task::Regression, &config)?;
    ctx.write("model_height.json", serde_json::to_string(&model).expect("model serializes").as_bytes())?;
    let truth: Vec<f64> = labeled.iter().map(|&i| labels[i].unwrap()).collect();
    let split = json!({"rows": labeled, "truth": truth, "test": test});
    ctx.write("split_height.json", split.to_string().as_bytes())
}

fn load_height_model(ctx: &mut Ctx) -> Result<PartitionedModel, PipelineError> {
    let text = ctx.read("model_height.json", Stage::TrainHeight)?;
    serde_json::from_str(&text).map_err(|e| EnsembleError::Format(e.to_string()).into())
}

fn check_names(e: &BaggedEnsemble, m: &FeatureMatrix) -> Result<(), PipelineError> {
    if e.feature_names != m.names {
        return Err(EnsembleError::SchemaMismatch.into());
    }
    Ok(())
}

fn predict_height(ctx: &mut Ctx) -> Result<(), PipelineError> {
    let roofs = rooftops(ctx)?;
    let model = load_height_model(ctx)?;
    let m = load_matrix(ctx, "features_height.csv", Stage::Features)?;
    check_names(&model.combination, &m)?;
    let tiers = load_context(ctx, &roofs.ids)?;
    let split = json_artifact(ctx, "split_height.json", Stage::TrainHeight)?;
    let mut truth = vec![None; roofs.ids.len()];
    for (i, t) in usizes(&split["rows"]).into_iter().zip(f64s(&split["truth"])) {
        truth[i] = Some(t);
    }
    let floor = ctx.cfg.floor_height();
    let rows: Vec<Vec<String>> = (0..m.n_rows())
        .into_par_iter()
        .map(|i| {
            let p = model.route(tiers[i].0).member_predictions(m.row(i));
            // never below one floor
            let h = (p.iter().sum::<f64>() / p.len() as f64).max(floor);
            let re = truth[i].filter(|t| *t > 0.0).map(|t| {
                p.iter().map(|x| (x - t).abs() / t).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r), b.max(r)))
            });
            vec![roofs.ids[i].clone(), h.to_string(), cell(re.map(|r| r.0)), cell(re.map(|r| r.1))]
        })
        .collect();
    ctx.write("pred_height.csv", &table(&["building_id", "height", "h_re_min", "h_re_max"], rows))
}

fn read_pred_height(ctx: &mut Ctx, ids: &[String]) -> Result<Vec<(f64, Option<(f64, f64)>)>, PipelineError> {
    let text = ctx.read("pred_height.csv", Stage::PredictHeight)?;
    read_table(&text, ids, "pred_height.csv")?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let h = parse_cell(&r[1], i + 2)?.unwrap_or(f64::NAN);
            let re = parse_cell(&r[2], i + 2)?.zip(parse_cell(&r[3], i + 2)?);
            Ok((h, re))
        })
        .collect()
}

fn train_function(ctx: &mut Ctx) -> Result<(), PipelineError> {
    let roofs = rooftops(ctx)?;
    let heights = read_pred_height(ctx, &roofs.ids)?;
    let fctx = context_layers(ctx)?;
    let reg = FeatureRegistry::default_function();
    let inputs: Vec<BuildingInput> = (0..roofs.ids.len())
        .map(|i| BuildingInput {
            id: roofs.ids[i].clone(),
            polygon: roofs.polygons[i].clone(),
            pred_height: Some(heights[i].0),
        })
        .collect();
    let m = assemble_feature_matrix(&inputs, &fctx, &reg, &ctx.cfg.feature_params())?;
    ctx.write("registry_function.txt", reg.to_manifest().as_bytes())?;
    ctx.write("features_function.csv", m.to_csv().as_bytes())?;

    let aois = load_aois(&ctx.input("aois")?, &ctx.proj)?;
    let labels = assign_function_labels(&roofs.centroids, &aois);
    let labeled: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_some()).collect();
    let task = Task::Classification {
        n_classes: FunctionLabel::ALL.len(),
    };
    let config = ctx.cfg.ensemble_config(task)?;
    let (test, rest) = config.plan.test_split(labeled.len());
    let train_rows: Vec<usize> = rest.iter().map(|&k| labeled[k]).collect();
    let ds = Dataset::from_matrix(&m.select_rows(&train_rows));
    let y: Vec<f64> = train_rows.iter().map(|&i| labels[i].unwrap().index() as f64).collect();
    let model = train_bagged(&ds, &y, task, &config)?;
    ctx.write("model_function.json", model.to_json().as_bytes())?;
    let classes: Vec<usize> = labeled.iter().map(|&i| labels[i].unwrap().index()).collect();
    let split = json!({"rows": labeled, "labels": classes, "test": test});
    ctx.write("split_function.json", split.to_string().as_bytes())
}

fn load_function_model(ctx: &mut Ctx) -> Result<BaggedEnsemble, PipelineError> {
    Ok(BaggedEnsemble::from_json(&ctx.read("model_function.json", Stage::TrainFunction)?)?)
}

/// Winning class and its vote share.
fn vote_share(e: &BaggedEnsemble, row: &[f64]) -> (usize, f64) {
    let p = e.member_predictions(row);
    let k = vote(&p, FunctionLabel::ALL.len());
    (k, p.iter().filter(|&&c| c as usize == k).count() as f64 / p.len() as f64)
}

fn predict_function(ctx: &mut Ctx) -> Result<(), PipelineError> {
    let roofs = rooftops(ctx)?;
    let model = load_function_model(ctx)?;
    let m = load_matrix(ctx, "features_function.csv", Stage::TrainFunction)?;
    check_names(&model, &m)?;
    let rows: Vec<Vec<String>> = (0..m.n_rows())
        .into_par_iter()
        .map(|i| {
            let (k, share) = vote_share(&model, m.row(i));
            vec![roofs.ids[i].clone(), FunctionLabel::ALL[k].as_str().into(), share.to_string()]
        })
        .collect();
    ctx.write("pred_function.csv", &table(&["building_id", "func", "func_vote"], rows))
}

fn mode_cell(m: &QualityMode) -> String {
    match m {
        QualityMode::NoObservationPoints => "NoObservationPoints".into(),
        QualityMode::NoImagesThatYear => "NoImagesThatYear".into(),
        QualityMode::Score(v) => v.to_string(),
    }
}

fn parse_mode(s: &str, line: usize) -> Result<QualityMode, PipelineError> {
    match s {
        "NoObservationPoints" => Ok(QualityMode::NoObservationPoints),
        "NoImagesThatYear" => Ok(QualityMode::NoImagesThatYear),
        _ => Ok(QualityMode::Score(parse_cell(s, line)?.ok_or_else(|| PipelineError::Table {
            line,
            message: "empty quality score".into(),
        })?)),
    }
}

const QUALITY_HEADER: [&str; 9] = ["building_id", "q_year", "q_k1", "q_k2", "q_k3", "q_k4", "q_k5", "q_k6", "q_total"];

fn quality(ctx: &mut Ctx) -> Result<(), PipelineError> {
    let roofs = rooftops(ctx)?;
    let layer = SviLayer::new(load_svi(&ctx.input("svi")?, &ctx.proj)?);
    let radius = ctx.cfg.quality_buffer();
    let rows: Vec<Vec<String>> = roofs
        .centroids
        .par_iter()
        .zip(&roofs.ids)
        .map(|(c, id)| {
            let q = quality_latest(&layer.in_buffer(c, radius));
            let mut r = vec![id.clone(), q.year.map(|y| y.to_string()).unwrap_or_default()];
            r.extend(q.types.iter().map(mode_cell));
            r.push(cell(q.total));
            r
        })
        .collect();
    ctx.write("quality.csv", &table(&QUALITY_HEADER, rows))
}

fn read_quality(ctx: &mut Ctx, ids: &[String]) -> Result<Vec<QualityResult>, PipelineError> {
    let text = ctx.read("quality.csv", Stage::Quality)?;
    read_table(&text, ids, "quality.csv")?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let line = i + 2;
            let mut types = [QualityMode::NoObservationPoints; 6];
            for k in 0..6 {
                types[k] = parse_mode(&r[2 + k], line)?;
            }
            Ok(QualityResult {
                year: parse_cell(&r[1], line)?.map(|y| y as i32),
                types,
                total: parse_cell(&r[8], line)?,
            })
        })
        .collect()
}

fn age(ctx: &mut Ctx) -> Result<(), PipelineError> {
    let roofs = rooftops(ctx)?;
    let stack = ImperviousStack::read_dir(&ctx.input("impervious_dir")?)?;
    let rows = roofs
        .centroids
        .iter()
        .zip(&roofs.ids)
        .map(|(c, id)| match assign_age(c, &stack) {
            Ok(a) => Ok(vec![id.clone(), a.to_string()]),
            // outside the stack: no age
            Err(IndicativeError::OutOfExtent { .. }) => Ok(vec![id.clone(), String::new()]),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>, _>>()?;
    ctx.write("age.csv", &table(&["building_id", "age"], rows))
}

/// Pixel confusion over every tile of the grid (missing tiles are empty).
fn seg_table(ctx: &mut Ctx) -> Result<Option<Vec<u8>>, PipelineError> {
    let (Some(pred), Some(truth)) = (ctx.optional_input("masks_dir")?, ctx.optional_input("truth_masks_dir")?) else {
        return Ok(None);
    };
    let cfg = ctx.cfg;
    let grid = tile_extent(&cfg.extent()?, cfg.tile_size_px(), cfg.pixel_size())?;
    let (ps, ts) = (MaskFileSegmenter { dir: pred }, MaskFileSegmenter { dir: truth });
    let mut c = SegConfusion::default();
    for (r, col) in grid.tiles() {
        let req = TileRequest::for_tile(&grid, r, col);
        c = c + seg_confusion(&ps.run(&req)?, &ts.run(&req)?)?;
    }
    let s = seg_metrics(&c);
    let row = vec![
        c.tp.to_string(),
        c.fp.to_string(),
        c.fn_.to_string(),
        c.tn.to_string(),
        s.precision.to_string(),
        s.recall.to_string(),
        s.f1.to_string(),
        s.accuracy.to_string(),
        s.iou_building.to_string(),
        s.iou_background.to_string(),
        s.miou.to_string(),
        s.undefined.join(";"),
    ];
    let header = [
        "tp", "fp", "fn", "tn", "precision", "recall", "f1", "accuracy", "iou_building", "iou_background", "miou",
        "undefined",
    ];
    Ok(Some(table(&header, [row])))
}

fn evaluate(ctx: &mut Ctx) -> Result<(), PipelineError> {
    let roofs = rooftops(ctx)?;
    let n = roofs.ids.len();
    let context = load_context(ctx, &roofs.ids)?;
    let heights = read_pred_height(ctx, &roofs.ids)?;
    let funcs = {
        let text = ctx.read("pred_function.csv", Stage::PredictFunction)?;
        read_table(&text, &roofs.ids, "pred_function.csv")?
            .iter()
            .enumerate()
            .map(|(i, r)| Ok((r[1].parse::<FunctionLabel>()?, parse_cell(&r[2], i + 2)?)))
            .collect::<Result<Vec<_>, PipelineError>>()?
    };
    let qualities = read_quality(ctx, &roofs.ids)?;
    let ages = {
        let text = ctx.read("age.csv", Stage::Age)?;
        read_table(&text, &roofs.ids, "age.csv")?
            .iter()
            .map(|r| if r[1].is_empty() { Ok(None) } else { r[1].parse::<AgeClass>().map(Some) })
            .collect::<Result<Vec<_>, _>>()?
    };

    // height: routed partition model vs combination on the held-out rows
    let model = load_height_model(ctx)?;
    let hm = load_matrix(ctx, "features_height.csv", Stage::Features)?;
    let split = json_artifact(ctx, "split_height.json", Stage::TrainHeight)?;
    let (rows, truth) = (usizes(&split["rows"]), f64s(&split["truth"]));
    let test: Vec<usize> = usizes(&split["test"]);
    let tiers: Vec<CityTier> = test.iter().map(|&k| context[rows[k]].0).collect();
    let t: Vec<f64> = test.iter().map(|&k| truth[k]).collect();
    let members: Vec<Vec<f64>> = test.iter().map(|&k| model.route(context[rows[k]].0).member_predictions(hm.row(rows[k]))).collect();
    let routed: Vec<f64> = members.iter().map(|p| p.iter().sum::<f64>() / p.len() as f64).collect();
    let combined: Vec<f64> = test.iter().map(|&k| model.combination.predict_row(hm.row(rows[k]))).collect();
    let mut reg_rows = Vec::new();
    for (name, pred) in [("partition", &routed), ("combination", &combined)] {
        let groups = CityTier::ALL.iter().map(|t| Some(*t)).chain([None]);
        for g in groups {
            let idx: Vec<usize> = (0..test.len()).filter(|&i| g.is_none_or(|g| tiers[i] == g)).collect();
            let (y, p): (Vec<f64>, Vec<f64>) = idx.iter().map(|&i| (t[i], pred[i])).unzip();
            let label = g.map_or("all", |g| g.as_str()).to_string();
            let mut r = vec![name.to_string(), label, idx.len().to_string()];
            match reg_metrics(&y, &p) {
                Ok(m) => r.extend([m.rmse.to_string(), m.mae.to_string(), cell(m.r2)]),
                Err(_) => r.extend([String::new(), String::new(), String::new()]),
            }
            reg_rows.push(r);
        }
    }
    ctx.write("metrics_reg.csv", &table(&["model", "tier", "n", "rmse", "mae", "r2"], reg_rows))?;

    let u = uncertainty(&members, &t)?;
    let bin_rows = u.bins.iter().map(|b| {
        vec![
            b.lo.to_string(),
            b.hi.to_string(),
            b.count.to_string(),
            b.mean_ae_min.to_string(),
            b.mean_ae_max.to_string(),
            cell(b.mean_re_min),
            cell(b.mean_re_max),
        ]
    });
    let header = ["lo", "hi", "count", "mean_ae_min", "mean_ae_max", "mean_re_min", "mean_re_max"];
    ctx.write("metrics_uncertainty.csv", &table(&header, bin_rows))?;

    // function: held-out labeled rows
    let fmodel = load_function_model(ctx)?;
    let fm = load_matrix(ctx, "features_function.csv", Stage::TrainFunction)?;
    let fsplit = json_artifact(ctx, "split_function.json", Stage::TrainFunction)?;
    let (frows, flabels) = (usizes(&fsplit["rows"]), usizes(&fsplit["labels"]));
    let ftest = usizes(&fsplit["test"]);
    let y: Vec<usize> = ftest.iter().map(|&k| flabels[k]).collect();
    let p: Vec<usize> = ftest.iter().map(|&k| fmodel.predict_row(fm.row(frows[k])) as usize).collect();
    let c = cls_metrics(&y, &p, FunctionLabel::ALL.len())?;
    let mut cls_rows: Vec<Vec<String>> = FunctionLabel::ALL
        .iter()
        .zip(&c.per_class)
        .map(|(l, m)| {
            let absent = c.absent.contains(&l.index());
            vec![
                l.as_str().into(),
                m.precision.to_string(),
                m.recall.to_string(),
                m.f1.to_string(),
                m.support.to_string(),
                absent.to_string(),
            ]
        })
        .collect();
    cls_rows.push(vec!["macro".into(), c.macro_precision.to_string(), c.macro_recall.to_string(), c.macro_f1.to_string(), y.len().to_string(), String::new()]);
    cls_rows.push(vec!["accuracy".into(), String::new(), String::new(), c.accuracy.to_string(), y.len().to_string(), String::new()]);
    ctx.write("metrics_cls.csv", &table(&["class", "precision", "recall", "f1", "support", "absent"], cls_rows))?;

    if let Some(seg) = seg_table(ctx)? {
        ctx.write("metrics_seg.csv", &seg)?;
    }

    // age and quality against truth carried by the reference footprints
    if let Some(p) = ctx.optional_input("reference")? {
        let reference = load_reference(&p, &ctx.proj)?;
        let matched = match_reference(&roofs.centroids, &reference);
        let truth_of = |i: usize, key: &str| matched[i].and_then(|r| reference[r].properties.get(key).cloned());
        let pairs: Vec<(AgeClass, AgeClass)> = (0..n)
            .filter_map(|i| {
                let t = truth_of(i, "true_age")?.as_str()?.parse::<AgeClass>().ok()?;
                Some((t, ages[i]?))
            })
            .collect();
        if !pairs.is_empty() {
            let exact = pairs.iter().filter(|(a, b)| a == b).count() as f64 / pairs.len() as f64;
            let binned = pairs.iter().filter(|(a, b)| age_bin(*a) == age_bin(*b)).count() as f64 / pairs.len() as f64;
            let row = vec![pairs.len().to_string(), exact.to_string(), binned.to_string()];
            ctx.write("metrics_age.csv", &table(&["n", "exact_accuracy", "bin_agreement"], [row]))?;
        }
        let (qt, qp): (Vec<f64>, Vec<f64>) = (0..n)
            .filter_map(|i| Some((truth_of(i, "true_q_total")?.as_f64()?, qualities[i].total?)))
            .unzip();
        if !qt.is_empty() {
            let mae = qt.iter().zip(&qp).map(|(a, b)| (a - b).abs()).sum::<f64>() / qt.len() as f64;
            let row = vec![qt.len().to_string(), mae.to_string(), cell(pearson_r2(&qt, &qp))];
            ctx.write("metrics_quality.csv", &table(&["n", "mae", "r2"], [row]))?;
        }
    }

    let feats: Vec<VectorFeature> = (0..n)
        .map(|i| {
            let mut r = BuildingRecord::new(&roofs.ids[i], roofs.polygons[i].clone());
            r.height = Some(heights[i].0).filter(|h| h.is_finite());
            r.h_re = heights[i].1;
            r.func = Some(funcs[i].0);
            r.func_vote = funcs[i].1;
            r.age = ages[i];
            r.quality = Some(qualities[i]);
            r.tier = Some(context[i].0);
            r.city_id = context[i].1.clone();
            r.to_feature()
        })
        .collect();
    let text = features_to_string(&feats, &ctx.proj);
    ctx.write("buildings.geojson", text.as_bytes())
}

/// Squared Pearson correlation; `None` when either side has no variance.
pub(crate) fn pearson_r2(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    if a.len() < 2 {
        return None;
    }
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    (va > 0.0 && vb > 0.0).then(|| cov * cov / (va * vb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{synth_city, write_city, CityParams};

    fn fast() -> [(&'static str, &'static str); 4] {
        [("n_members", "4"), ("grid_depths", "3"), ("grid_rounds", "20"), ("min_samples", "20")]
    }

    #[test]
    fn missing_artifact_names_the_stage() {
        let dir = tempfile::tempdir().unwrap();
        let city = synth_city(2, &CityParams { n_buildings: 30, tile_size_px: 128, ..CityParams::default() }).unwrap();
        let cfg = PipelineConfig::load(&write_city(dir.path(), &city, &fast()).unwrap()).unwrap();
        match run_stage(&cfg, Stage::Features) {
            Err(PipelineError::MissingArtifact { stage, .. }) => assert_eq!(stage, "vectorize"),
            other => panic!("{other:?}"),
        }
        run_stage(&cfg, Stage::Vectorize).unwrap();
        match run_stage(&cfg, Stage::TrainHeight) {
            Err(PipelineError::MissingArtifact { stage, .. }) => assert_eq!(stage, "features"),
            other => panic!("{other:?}"),
        }
        let mut no_seed = PipelineConfig::parse("", dir.path()).unwrap();
        no_seed.set("origin_lon", "1").unwrap();
        assert!(matches!(run_stage(&no_seed, Stage::Vectorize), Err(PipelineError::MissingKey(_))));
    }

    #[test]
    fn end_to_end_small_city() {
        let dir = tempfile::tempdir().unwrap();
        let city = synth_city(11, &CityParams { n_buildings: 150, tile_size_px: 128, ..CityParams::default() }).unwrap();
        let cfg = PipelineConfig::load(&write_city(dir.path(), &city, &fast()).unwrap()).unwrap();
        let reports = run_all(&cfg).unwrap();
        assert_eq!(reports.len(), 9);
        let work = cfg.work_dir();
        let feats = load_vector(&work.join("buildings.geojson"), &cfg.projection().unwrap()).unwrap();
        assert_eq!(feats.len(), 150);
        for (i, f) in feats.iter().enumerate() {
            let r = BuildingRecord::from_feature(f, i).unwrap();
            assert!(r.height.unwrap() > 0.0 && r.func.is_some() && r.age.is_some() && r.quality.is_some());
        }
        for t in ["metrics_seg.csv", "metrics_reg.csv", "metrics_cls.csv", "metrics_uncertainty.csv", "metrics_age.csv", "metrics_quality.csv"] {
            assert!(work.join(t).exists(), "{t}");
        }
        let age = std::fs::read_to_string(work.join("metrics_age.csv")).unwrap();
        assert!(age.lines().nth(1).unwrap().split(',').nth(1) == Some("1"), "{age}");
        let report: StageReport =
            serde_json::from_str(&std::fs::read_to_string(work.join("evaluate.report.json")).unwrap()).unwrap();
        assert_eq!(report, reports[8]);
        assert!(report.inputs.contains_key("rooftops.geojson"));
        // rerun: identical output hashes
        let again = run_stage(&cfg, Stage::TrainHeight).unwrap();
        assert_eq!(again.outputs, reports[2].outputs);
    }
}
