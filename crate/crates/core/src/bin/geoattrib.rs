use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use geoattrib::pipeline::{
    audit_router, load_svi, load_vector, match_svi_to_buildings, run_stage, synth_city, write_city, AuditState,
    BuildingRecord, CityParams, PipelineConfig, PipelineError, Stage,
};

#[derive(Parser)]
#[command(name = "geoattrib", about = "Building height, function, age and quality from rooftops and context layers")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(clap::Args)]
struct Common {
    /// Pipeline config file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Height,
    Function,
    All,
}

#[derive(Subcommand)]
enum Verb {
    /// Write a synthetic city and its config to `--config`'s directory.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2000)]
        buildings: usize,
    },
    Vectorize(Common),
    Features(Common),
    /// Train models; function training needs predicted heights, so `all` also predicts height.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Target::All)]
        target: Target,
    },
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Target::All)]
        target: Target,
    },
    Quality(Common),
    Age(Common),
    Evaluate(Common),
    /// Every stage in order.
    Run(Common),
    ServeAudit(Common),
}

fn load(c: &Common) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = PipelineConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.set("seed", &s.to_string())?;
    }
    Ok(cfg)
}

fn stages(c: &Common, list: &[Stage]) -> Result<(), PipelineError> {
    let cfg = load(c)?;
    for &s in list {
        let r = run_stage(&cfg, s)?;
        eprintln!("{s}: {} outputs in {:.2}s", r.outputs.len(), r.wall_time_s);
    }
    Ok(())
}

fn synth(c: &Common, buildings: usize) -> Result<(), PipelineError> {
    let seed = c.seed.ok_or_else(|| PipelineError::MissingKey("seed".into()))?;
    let dir = c.config.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let city = synth_city(seed, &CityParams { n_buildings: buildings, ..CityParams::default() })?;
    let written = write_city(dir, &city, &[])?;
    if written != c.config {
        std::fs::rename(&written, &c.config).map_err(|e| PipelineError::io(&c.config, e))?;
    }
    eprintln!("{} buildings written to {}", city.buildings.len(), dir.display());
    Ok(())
}

fn serve(c: &Common) -> Result<(), PipelineError> {
    let cfg = load(c)?;
    let proj = cfg.projection()?;
    let out = cfg.work_dir().join("buildings.geojson");
    if !out.exists() {
        return Err(PipelineError::MissingArtifact {
            artifact: out.display().to_string(),
            stage: "evaluate",
        });
    }
    let records = load_vector(&out, &proj)?
        .iter()
        .enumerate()
        .map(|(i, f)| BuildingRecord::from_feature(f, i))
        .collect::<Result<Vec<_>, _>>()?;
    let svi = load_svi(&cfg.require_path("svi")?, &proj)?;
    let images = cfg.path("images_dir");
    let tasks = match_svi_to_buildings(&records, &svi, cfg.svi_match_radius(), images.as_deref());
    let log = cfg.path("audit_log").unwrap_or_else(|| cfg.work_dir().join("annotations.jsonl"));
    let state = Arc::new(AuditState::open(tasks, Some(log), cfg.floor_height())?);
    let addr = cfg.raw("audit_addr").expect("has default").to_string();
    let rt = tokio::runtime::Runtime::new().map_err(|e| PipelineError::Audit(e.to_string()))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr).await.map_err(|e| PipelineError::Audit(format!("{addr}: {e}")))?;
        eprintln!("serving {} tasks on http://{addr}", state.tasks().len());
        axum::serve(listener, audit_router(state)).await.map_err(|e| PipelineError::Audit(e.to_string()))
    })
}

fn main() -> ExitCode {
    use Stage::*;
    let res = match Cli::parse().verb {
        Verb::Synth { common, buildings } => synth(&common, buildings),
        Verb::Vectorize(c) => stages(&c, &[Vectorize]),
        Verb::Features(c) => stages(&c, &[Features]),
        Verb::Train { common, target } => match target {
            Target::Height => stages(&common, &[TrainHeight]),
            Target::Function => stages(&common, &[TrainFunction]),
            Target::All => stages(&common, &[TrainHeight, PredictHeight, TrainFunction]),
        },
        Verb::Predict { common, target } => match target {
            Target::Height => stages(&common, &[PredictHeight]),
            Target::Function => stages(&common, &[PredictFunction]),
            Target::All => stages(&common, &[PredictHeight, PredictFunction]),
        },
        Verb::Quality(c) => stages(&c, &[Quality]),
        Verb::Age(c) => stages(&c, &[Age]),
        Verb::Evaluate(c) => stages(&c, &[Evaluate]),
        Verb::Run(c) => stages(&c, &Stage::ALL),
        Verb::ServeAudit(c) => serve(&c),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
