//! Roll detected family locations into origin-destination flows at every
//! scale, print top/bottom net-immigration tables and city-group flows.

use migraflow::flow::{flow_matrix, group_flows, migrations_between, net_immigration, GroupDirection, GroupSpec};
use migraflow::geo::{MonthIndex, Scale};
use migraflow::pipeline::{analyze, top_table, RunConfig};
use migraflow::sim::{generate_world, simulate};

fn main() -> anyhow::Result<()> {
    let mut config = RunConfig::default();
    config.sim.n_households = 8000;
    config.sim.n_companies = 2400;
    config.sync();
    let world = generate_world(&config.sim)?;
    let out = simulate(&world, &config.sim)?;
    let analysis = analyze(&out, &config)?;
    let hierarchy = &world.geography.hierarchy;

    let (from, to) = (MonthIndex(0), MonthIndex(2));
    let events = migrations_between(&analysis.detection.locations, from, to)?;
    println!("{} families changed community between month {from} and month {to}\n", events.len());

    for scale in [Scale::Province, Scale::City] {
        let m = flow_matrix(&events, hierarchy, scale, from, to)?;
        let intra: u64 = m.intra.values().sum();
        println!("{scale} scale: {} moves across units, {intra} within one", m.total_inter());
        let table = net_immigration(&m)?;
        println!("  rank  code       net  regularized");
        for row in top_table(&table, 6, 4) {
            let reg = row.regularized.map(|r| format!("{r:+.2}")).unwrap_or_default();
            println!("  {:>4}  {:<8} {:>5}  {reg}", row.rank, row.code, row.raw);
        }
        println!();
    }

    // two groups of neighboring cities
    let spec = GroupSpec::parse("North:P0-C0,P0-C1,P0-C2,P0-C3\nSouth:P3-C0,P3-C1,P3-C2,P3-C3\n", hierarchy)?;
    let groups = group_flows(&events, &spec, hierarchy)?;
    println!("city groups");
    for (dir, count) in &groups.counts {
        let name = match dir {
            GroupDirection::Intra(g) => format!("intra {g}"),
            GroupDirection::Between(a, b) => format!("{a} -> {b}"),
        };
        println!("  {name:<16} {count:>4}  {:.2}", groups.regularized[dir]);
    }
    Ok(())
}
