//! Label APs from connection sessions and check the labels against the
//! simulator's knowledge of which APs are really in homes.

use migraflow::label::{label_sessions, LabelRules};
use migraflow::sim::{generate_world, simulate, SimConfig};

fn main() -> anyhow::Result<()> {
    let config = SimConfig {
        n_households: 2000,
        n_companies: 600,
        ..SimConfig::default()
    };
    let world = generate_world(&config)?;
    let out = simulate(&world, &config)?;

    let rules = LabelRules::default();
    let outcome = label_sessions(&out.sessions, &rules);
    let positives = outcome.labels.iter().filter(|l| l.label.is_positive()).count();
    let agree = outcome
        .labels
        .iter()
        .filter(|l| l.label.is_positive() == world.is_residential(l.ap_id))
        .count();

    println!("{} sessions, {} malformed", out.sessions.len(), outcome.malformed_sessions);
    println!(
        "{} of {} APs labeled ({} residential, {} not)",
        outcome.labels.len(),
        world.access_points.len(),
        positives,
        outcome.labels.len() - positives
    );
    println!(
        "labels agree with the true AP kind for {:.2}% (the rest are households and offices with unusual hours)",
        100.0 * agree as f64 / outcome.labels.len() as f64
    );
    for l in outcome.labels.iter().take(5) {
        println!("  ap {:>5}  {:?}  support {}", l.ap_id, l.label, l.support);
    }
    Ok(())
}
