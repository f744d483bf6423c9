//! Monthly monitoring: double the move rate in month 2 and watch the
//! per-month net and total migration series of the busiest city respond.

use migraflow::flow::{flow_matrix, migrations_between, time_series};
use migraflow::geo::{MonthIndex, Scale};
use migraflow::pipeline::{analyze, RunConfig};
use migraflow::sim::{generate_world, simulate};

fn main() -> anyhow::Result<()> {
    let mut config = RunConfig::default();
    config.sim.n_households = 8000;
    config.sim.n_companies = 2400;
    config.sim.weeks = 20;
    config.sim.monthly_move_multiplier = vec![1.0, 1.0, 2.0, 1.0, 1.0];
    config.sync();
    let world = generate_world(&config.sim)?;
    let out = simulate(&world, &config.sim)?;
    let analysis = analyze(&out, &config)?;
    let hierarchy = &world.geography.hierarchy;
    let locations = &analysis.detection.locations;

    let mut matrices = Vec::new();
    for m in 0..4 {
        let (from, to) = (MonthIndex(m), MonthIndex(m + 1));
        let events = migrations_between(locations, from, to)?;
        matrices.push(flow_matrix(&events, hierarchy, Scale::City, from, to)?);
    }
    let all_moves: Vec<u64> = matrices.iter().map(|m| m.total_inter()).collect();
    println!("inter-city moves per month: {all_moves:?}");

    // the city with the most traffic over the whole run
    let busiest = hierarchy
        .places(Scale::City)
        .max_by_key(|c| matrices.iter().map(|m| m.immigration(c) + m.emigration(c)).sum::<u64>())
        .expect("world has cities");
    println!("\nseries for {}", busiest.code());
    println!("  months   in  out  net  total  ratio");
    for p in time_series(&matrices, busiest)? {
        println!(
            "  {}->{}  {:>4} {:>4} {:>4} {:>6}  {:+.2}",
            p.from_month, p.to_month, p.immigration, p.emigration, p.net, p.total, p.ratio
        );
    }
    Ok(())
}
