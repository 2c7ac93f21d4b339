//! Runs the pipeline on a small synthetic city and serves the audit API on
//! 127.0.0.1:8080 until interrupted.

use std::sync::Arc;

use geoattrib::pipeline::{
    audit_router, load_svi, load_vector, match_svi_to_buildings, run_all, synth_city, write_city, AuditState,
    BuildingRecord, CityParams, PipelineConfig,
};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("geoattrib_audit_demo");
    let city = synth_city(5, &CityParams { n_buildings: 300, ..CityParams::default() })?;
    let cfg = PipelineConfig::load(&write_city(&dir, &city, &[("n_members", "5")])?)?;
    run_all(&cfg)?;
    let proj = cfg.projection()?;
    let records = load_vector(&cfg.work_dir().join("buildings.geojson"), &proj)?
        .iter()
        .enumerate()
        .map(|(i, f)| BuildingRecord::from_feature(f, i))
        .collect::<Result<Vec<_>, _>>()?;
    let svi = load_svi(&cfg.require_path("svi")?, &proj)?;
    let images = cfg.path("images_dir");
    let tasks = match_svi_to_buildings(&records, &svi, cfg.svi_match_radius(), images.as_deref());
    let state = Arc::new(AuditState::open(tasks, Some(dir.join("annotations.jsonl")), cfg.floor_height())?);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:8080").await?;
    println!("{} tasks; try: curl http://127.0.0.1:8080/tasks", state.tasks().len());
    axum::serve(listener, audit_router(state)).await?;
    Ok(())
}
