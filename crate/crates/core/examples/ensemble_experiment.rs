//! Partition vs combination height ensembles on a synthetic city.
//! Usage: ensemble_experiment [buildings] [members] [seed]

use std::time::Instant;

use geoattrib::ensemble::{EnsembleConfig, Task};
use geoattrib::pipeline::{height_experiment, synth_city, CityParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let n = args.first().copied().unwrap_or(5000) as usize;
    let members = args.get(1).copied().unwrap_or(100) as usize;
    let seed = args.get(2).copied().unwrap_or(42);
    let start = Instant::now();
    let city = synth_city(seed, &CityParams { n_buildings: n, ..CityParams::default() })?;
    let mut config = EnsembleConfig::default_for(Task::Regression);
    config.plan.iterations = members;
    config.plan.master_seed = seed;
    let r = height_experiment(&city, &config)?;
    println!("{:<18} {:>4} {:>9} {:>9}", "tier", "n", "mae_part", "mae_comb");
    for t in &r.tiers {
        println!("{:<18} {:>4} {:>9.3} {:>9.3}", t.tier.as_str(), t.partition.n, t.partition.mae, t.combination.mae);
    }
    println!("overall r2: partition {:.4}, combination {:.4}", r.partition.r2.unwrap_or(f64::NAN), r.combination.r2.unwrap_or(f64::NAN));
    println!("partition wins {}/{} tiers; {} training rows; {:.1}s", r.partition_wins(), r.tiers.len(), r.n_train, start.elapsed().as_secs_f64());
    Ok(())
}
