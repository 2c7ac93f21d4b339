//! Writes a synthetic city, runs every stage and prints the metric tables.
//! Usage: run_pipeline [dir] [buildings]

use geoattrib::pipeline::{run_all, synth_city, write_city, CityParams, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = std::path::PathBuf::from(args.next().unwrap_or_else(|| "synth_city".into()));
    let n: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(500);
    let city = synth_city(7, &CityParams { n_buildings: n, ..CityParams::default() })?;
    let cfg = PipelineConfig::load(&write_city(&dir, &city, &[("n_members", "10")])?)?;
    for r in run_all(&cfg)? {
        println!("{:<17} {:>6.2}s  {} outputs", r.stage, r.wall_time_s, r.outputs.len());
    }
    for t in ["metrics_reg.csv", "metrics_cls.csv", "metrics_seg.csv", "metrics_age.csv", "metrics_quality.csv"] {
        println!("\n== {t}\n{}", std::fs::read_to_string(cfg.work_dir().join(t))?);
    }
    Ok(())
}
