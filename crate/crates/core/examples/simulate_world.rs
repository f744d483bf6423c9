//! Generate a small seeded world, simulate twelve weeks and write the logs.
//!
//! ```text
//! cargo run --example simulate_world -- /tmp/world
//! ```

use std::path::PathBuf;

use migraflow::geo::Scale;
use migraflow::pipeline::simulate_stage;
use migraflow::records::EventKind;
use migraflow::sim::SimConfig;

fn main() -> anyhow::Result<()> {
    let dir: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "out/world".into()).into();
    std::fs::create_dir_all(&dir)?;

    let config = SimConfig {
        n_households: 3000,
        n_companies: 900,
        ..SimConfig::default()
    };
    let out = simulate_stage(&config, &dir)?;
    let world = &out.final_world;

    println!("world: {} x {} m", world.geography.bounds().width_m, world.geography.bounds().height_m);
    for scale in Scale::ALL {
        println!("  {:>9}: {}", scale, world.geography.codes(scale).len());
    }
    println!(
        "{} buildings, {} access points, {} households, {} companies",
        world.buildings.len(),
        world.access_points.len(),
        world.households.len(),
        world.companies.len()
    );
    println!("{} scan observations, {} sessions", out.scans.len(), out.sessions.len());
    for kind in [EventKind::HouseholdMove, EventKind::CompanyMove, EventKind::Trade, EventKind::PocketNoise] {
        println!("  {:?}: {}", kind, out.events(kind).count());
    }
    println!("files written to {}", dir.display());
    Ok(())
}
