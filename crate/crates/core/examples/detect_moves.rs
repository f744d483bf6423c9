//! Detect AP relocations and show what each pseudo-migration filter removes,
//! using the simulator's ground truth to name the cause of each candidate.

use std::collections::BTreeMap;

use migraflow::detect::Filter;
use migraflow::pipeline::{analyze, RunConfig};
use migraflow::records::EventKind;
use migraflow::sim::{generate_world, simulate};

fn main() -> anyhow::Result<()> {
    let mut config = RunConfig::default();
    config.sim.n_households = 5000;
    config.sim.n_companies = 1500;
    // make trades common enough to see the trade filter work
    config.sim.trade_rate = 0.2;
    config.sync();

    let world = generate_world(&config.sim)?;
    let out = simulate(&world, &config.sim)?;
    let analysis = analyze(&out, &config)?;
    let det = &analysis.detection;

    // the ground-truth kind of relocation that explains each candidate
    let mut cause: BTreeMap<_, EventKind> = BTreeMap::new();
    for e in &out.truth {
        cause.insert((e.ap_id, e.week), e.kind);
    }
    let explain = |c: &migraflow::detect::MoveCandidate| {
        (c.from_week.0 + 1..=c.to_week.0)
            .find_map(|w| cause.get(&(c.ap_id, migraflow::geo::WeekIndex(w))).copied())
            .map(|k| format!("{k:?}"))
            .unwrap_or_else(|| "unexplained".into())
    };

    let mut table: BTreeMap<String, [usize; 5]> = BTreeMap::new();
    for c in &det.candidates {
        let row = table.entry(explain(c)).or_default();
        row[0] += 1;
        for (i, f) in Filter::ALL.iter().enumerate() {
            if det.context.rejects(*f, c) {
                row[i + 1] += 1;
            }
        }
        if !Filter::ALL.iter().any(|f| det.context.rejects(*f, c)) {
            row[4] += 1;
        }
    }
    println!("{:<14} {:>10} {:>8} {:>8} {:>8} {:>8}", "cause", "candidates", "trade", "non-res", "pocket", "kept");
    for (k, r) in &table {
        println!("{:<14} {:>10} {:>8} {:>8} {:>8} {:>8}", k, r[0], r[1], r[2], r[3], r[4]);
    }

    let correct = det
        .locations
        .iter()
        .filter(|l| out.true_community(l.family_id, l.week) == Some(&l.place))
        .count();
    println!(
        "\n{} family-week locations, {:.2}% at the true community",
        det.locations.len(),
        100.0 * correct as f64 / det.locations.len() as f64
    );
    for m in det.accepted.iter().take(5) {
        println!(
            "  ap {:>5}: week {} -> {}  {} -> {}  (similarity {:.3})",
            m.ap_id, m.from_week, m.to_week, m.origin.code(), m.destination.code(), m.similarity
        );
    }
    Ok(())
}
