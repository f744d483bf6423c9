use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use migraflow::flow::GroupSpec;
use migraflow::geo::{MonthIndex, Scale};
use migraflow::pipeline::{self, DetectInputs, RunConfig};
use migraflow::Error;

#[derive(Parser)]
#[command(name = "migraflow", version, about = "Population migration flows from WiFi AP relocations")]
struct Cli {
    /// Run configuration (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for outputs that are not given an explicit path.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic world and its scan/session logs.
    Simulate,
    /// Label APs from terminal sessions.
    Label {
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract per-AP features.
    Features {
        #[arg(long)]
        scans: PathBuf,
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long)]
        buildings: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the residential classifier.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a cross-validation report here.
        #[arg(long)]
        cv_out: Option<PathBuf>,
    },
    /// Detect AP relocations and derive weekly family locations.
    Detect {
        #[arg(long)]
        scans: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        trades: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        out_locations: Option<PathBuf>,
    },
    /// Build a flow matrix between two months.
    Aggregate {
        #[arg(long)]
        locations: PathBuf,
        #[arg(long)]
        from_month: u32,
        #[arg(long)]
        to_month: u32,
        #[arg(long, default_value = "city")]
        scale: Scale,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Place hierarchy file; derived from the configured world when omitted.
        #[arg(long)]
        hierarchy: Option<PathBuf>,
        /// City groups, one `name:city,city,...` per line.
        #[arg(long)]
        groups: Option<PathBuf>,
    },
    /// Net-immigration tables, a monthly series and a density grid.
    Report {
        /// Directory holding flows.csv (or the file itself).
        #[arg(long)]
        flows: PathBuf,
        #[arg(long)]
        place: Option<String>,
        #[arg(long)]
        series: Option<PathBuf>,
    },
    /// Every stage, from simulation to report.
    Run,
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => {
            let mut cfg = RunConfig::default();
            cfg.sync();
            cfg
        }
    };
    Ok(match cli.seed {
        Some(seed) => cfg.with_seed(seed),
        None => cfg,
    })
}

fn output(explicit: &Option<PathBuf>, dir: &Path, name: &str) -> PathBuf {
    explicit.clone().unwrap_or_else(|| dir.join(name))
}

fn execute(cli: &Cli, cfg: &RunConfig) -> anyhow::Result<()> {
    let dir = &cli.out_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    match &cli.command {
        Command::Simulate => {
            let out = pipeline::simulate_stage(&cfg.sim, dir)?;
            eprintln!(
                "{} scans, {} sessions, {} ground-truth events over {} weeks",
                out.scans.len(),
                out.sessions.len(),
                out.truth.len(),
                out.weeks()
            );
        }
        Command::Label { sessions, out } => {
            let outcome = pipeline::label_stage(sessions, &cfg.label, &output(out, dir, pipeline::LABELS))?;
            eprintln!(
                "{} labeled APs, {} malformed sessions skipped",
                outcome.labels.len(),
                outcome.malformed_sessions
            );
        }
        Command::Features {
            scans,
            sessions,
            buildings,
            out,
        } => {
            let table = pipeline::features_stage(
                scans,
                sessions,
                buildings,
                &cfg.features,
                &output(out, dir, pipeline::FEATURES),
            )?;
            eprintln!(
                "{} APs, {} excluded for lack of scans",
                table.features.len(),
                table.excluded.len()
            );
        }
        Command::Train {
            features,
            labels,
            out,
            cv_out,
        } => {
            let model = pipeline::train_stage(
                features,
                labels,
                &cfg.train,
                cfg.cv.folds,
                &output(out, dir, pipeline::MODEL),
                cv_out.as_deref(),
            )?;
            eprintln!("trained {} stages", model.stages.len());
        }
        Command::Detect {
            scans,
            features,
            model,
            trades,
            out,
            out_locations,
        } => {
            let geography = pipeline::geography_for(&cfg.world)?;
            let inputs = DetectInputs {
                scans,
                features,
                model,
                trades,
            };
            let d = pipeline::detect_stage(
                &inputs,
                &geography,
                &cfg.detect,
                &output(out, dir, pipeline::MOVES),
                &output(out_locations, dir, pipeline::LOCATIONS),
            )?;
            eprintln!("{} candidates, {} accepted", d.candidates.len(), d.accepted.len());
        }
        Command::Aggregate {
            locations,
            from_month,
            to_month,
            scale,
            out,
            hierarchy,
            groups,
        } => {
            let hierarchy = match hierarchy {
                Some(path) => pipeline::read_hierarchy(path)?,
                None => pipeline::geography_for(&cfg.world)?.hierarchy,
            };
            let spec = match groups {
                Some(path) => {
                    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                    Some(GroupSpec::parse(&text, &hierarchy)?)
                }
                None => None,
            };
            let group_out = dir.join(pipeline::GROUPS);
            let matrices = pipeline::aggregate_stage(
                locations,
                &hierarchy,
                &[(MonthIndex(*from_month), MonthIndex(*to_month))],
                &[*scale],
                &output(out, dir, pipeline::FLOWS),
                spec.as_ref().map(|s| (s, group_out.as_path())),
            )?;
            let moves: u64 = matrices.iter().map(|m| m.total_inter()).sum();
            eprintln!("{moves} moves across {scale} boundaries");
        }
        Command::Report { flows, place, series } => {
            let geography = pipeline::geography_for(&cfg.world)?;
            let flows = if flows.is_dir() {
                flows.join(pipeline::FLOWS)
            } else {
                flows.clone()
            };
            let mut report = cfg.report.clone();
            if place.is_some() {
                report.place = place.clone();
            }
            let written = pipeline::report_stage(&flows, &geography, &report, dir, series.as_deref())?;
            if !written.iter().any(|p| p.ends_with(pipeline::DENSITY)) {
                eprintln!("no community-scale flows, density grid skipped");
            }
            for p in written {
                eprintln!("wrote {}", p.display());
            }
        }
        Command::Run => {
            let manifest = pipeline::run_pipeline(cfg, dir)?;
            for s in &manifest.stages {
                eprintln!("{:>9}  {:>7} ms", s.name, s.wall_ms);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match execute(&cli, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
