//! The whole run from one config: simulate, label, extract features, train,
//! detect, aggregate and report, with a manifest of file digests.
//!
//! ```text
//! cargo run --release --example full_pipeline -- /tmp/run
//! ```

use std::path::PathBuf;

use migraflow::pipeline::{run_pipeline, RunConfig};

const CONFIG: &str = r#"
seed = 11

[sim]
n_households = 4000
n_companies = 1200

[report]
place = "P1-C2"
n_top = 3
n_bottom = 2
"#;

fn main() -> anyhow::Result<()> {
    let dir: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "out/run".into()).into();
    let config = RunConfig::parse(CONFIG)?;
    let manifest = run_pipeline(&config, &dir)?;

    println!("config digest {}", manifest.config_digest);
    for stage in &manifest.stages {
        println!("{:>9}  {:>6} ms", stage.name, stage.wall_ms);
        for (file, digest) in &stage.outputs {
            println!("           {file:<18} {}", &digest[..16]);
        }
    }
    println!("\n{}", std::fs::read_to_string(dir.join("net_province.csv"))?);
    println!("{}", std::fs::read_to_string(dir.join("series.csv"))?);
    Ok(())
}
