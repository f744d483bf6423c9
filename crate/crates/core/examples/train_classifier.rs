//! Extract features, cross-validate the boosted-stump classifier and print
//! the trained model in its text format.

use migraflow::features::{extract_all, FeatureConfig, FEATURE_NAMES};
use migraflow::gbdt::{cross_validate, train, Split, TrainConfig};
use migraflow::label::{label_sessions, LabelRules};
use migraflow::pipeline::training_samples;
use migraflow::sim::{generate_world, simulate, SimConfig};

fn main() -> anyhow::Result<()> {
    let config = SimConfig {
        n_households: 4000,
        n_companies: 1200,
        ..SimConfig::default()
    };
    let world = generate_world(&config)?;
    let out = simulate(&world, &config)?;

    let labels = label_sessions(&out.sessions, &LabelRules::default()).labels;
    let table = extract_all(&out.scans, &out.sessions, &world.building_records(), &FeatureConfig::default());
    let samples = training_samples(&table.features, &labels);
    println!("{} labeled APs with features", samples.len());

    let train_config = TrainConfig::default();
    let report = cross_validate(&samples, 5, &train_config)?;
    for (i, fold) in report.folds.iter().enumerate() {
        println!("  fold {i}: precision {:.4}  recall {:.4}", fold.precision, fold.recall);
    }
    println!("mean precision {:.4}, mean recall {:.4}", report.mean_precision, report.mean_recall);

    let model = train(&samples, &train_config)?;
    println!("training loss per stage: {:?}", model.training_loss);
    for (stump, gamma) in &model.stages {
        let rule = match stump.split {
            Split::Numeric { threshold } => format!("{} <= {threshold}", FEATURE_NAMES[stump.feature_index]),
            Split::Categorical { .. } => format!("{} in {{{}}}", FEATURE_NAMES[stump.feature_index], stump.split),
        };
        println!("  {rule:40} left {:+.3} right {:+.3} (rate {gamma:.3})", stump.left_value, stump.right_value);
    }

    // how the classifier does on every AP, labeled or not
    let (mut right, mut total) = (0, 0);
    for (ap, f) in &table.features {
        total += 1;
        if model.is_residential(f) == world.is_residential(*ap) {
            right += 1;
        }
    }
    println!("agreement with true AP kind on all {total} APs: {:.2}%", 100.0 * right as f64 / total as f64);
    print!("\n{}", model.to_text());
    Ok(())
}
