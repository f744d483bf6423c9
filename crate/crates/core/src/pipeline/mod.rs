//! File-to-file stages and the full run that chains them.
//!
//! Each stage reads and writes the headed CSV formats documented in
//! [`crate::records`]; [`run_pipeline`] drives all of them from one
//! [`RunConfig`] and records a [`RunManifest`] of digests and timings.

mod config;
mod manifest;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::detect::{run_detection, DetectConfig, Detection, FamilyLocation, MoveCandidate};
use crate::features::{extract_all, FeatureConfig, FeatureRecord, FeatureTable, FEATURE_NAMES};
use crate::flow::{
    density_grid, flow_matrix, group_flows, migrations_between, net_immigration, time_series, FlowError, FlowMatrix,
    FlowRecord, GroupDirection, GroupSpec, NetImmigrationTable,
};
use crate::gbdt::{cross_validate, train, Sample, StumpEnsemble, TrainConfig};
use crate::geo::{week_of, Geography, MonthIndex, PlaceHierarchy, Scale, WorldLayout, WEEKS_PER_MONTH};
use crate::label::{label_sessions, ApLabel, LabelOutcome, LabelRules};
use crate::records::{
    read_csv, write_csv_with_header, BuildingRecord, GroundTruthEvent, ScanObservation, SessionRecord, TradeRecord,
};
use crate::sim::{generate_world, simulate, SimConfig, SimOutput};
use crate::{Error, Result};

pub use config::{AggregateConfig, CvConfig, InputFiles, ReportConfig, RunConfig};
pub use manifest::{digest_bytes, digest_file, digest_files, RunManifest, StageRecord, STAGE_VERSIONS};

pub const SCANS: &str = "scans.csv";
pub const SESSIONS: &str = "sessions.csv";
pub const TRADES: &str = "trades.csv";
pub const TRUTH: &str = "truth.csv";
pub const BUILDINGS: &str = "buildings.csv";
pub const HIERARCHY: &str = "hierarchy.csv";
pub const LABELS: &str = "labels.csv";
pub const FEATURES: &str = "features.csv";
pub const MODEL: &str = "model.txt";
pub const CV: &str = "cv.csv";
pub const MOVES: &str = "moves.csv";
pub const LOCATIONS: &str = "locations.csv";
pub const FLOWS: &str = "flows.csv";
pub const GROUPS: &str = "groups.csv";
pub const SERIES: &str = "series.csv";
pub const DENSITY: &str = "density.csv";
pub const MANIFEST: &str = "manifest.json";

pub fn net_table_file(scale: Scale) -> String {
    format!("net_{scale}.csv")
}

const SCAN_HEADER: &[&str] = &["scanner_id", "timestamp", "x", "y", "ap_id", "rssi"];
const SESSION_HEADER: &[&str] = &["terminal_id", "ap_id", "connect_ts", "disconnect_ts", "car_call_ts"];
const TRADE_HEADER: &[&str] = &["ap_id", "week", "seller", "buyer"];
const TRUTH_HEADER: &[&str] = &["kind", "ap_id", "week", "origin", "destination"];
const BUILDING_HEADER: &[&str] = &["building_id", "x", "y", "p_office", "p_residential", "p_mixture", "p_uncertain"];
const LABEL_HEADER: &[&str] = &["ap_id", "label", "support"];
const MOVE_HEADER: &[&str] = &["ap_id", "from_week", "to_week", "similarity", "origin", "destination"];
const LOCATION_HEADER: &[&str] = &["family_id", "week", "place"];
const FLOW_HEADER: &[&str] = &["scale", "from_month", "to_month", "kind", "origin", "destination", "count"];

fn feature_header() -> Vec<&'static str> {
    std::iter::once("ap_id").chain(FEATURE_NAMES).collect()
}

/// Simulate a world and write its logs, ground truth, buildings and place
/// hierarchy into `dir`.
pub fn simulate_stage(config: &SimConfig, dir: &Path) -> Result<SimOutput> {
    let world = generate_world(config)?;
    let out = simulate(&world, config)?;
    write_csv_with_header(&dir.join(SCANS), SCAN_HEADER, &out.scans)?;
    write_csv_with_header(&dir.join(SESSIONS), SESSION_HEADER, &out.sessions)?;
    write_csv_with_header(&dir.join(TRADES), TRADE_HEADER, &out.trades)?;
    write_csv_with_header::<GroundTruthEvent>(&dir.join(TRUTH), TRUTH_HEADER, &out.truth)?;
    write_csv_with_header(&dir.join(BUILDINGS), BUILDING_HEADER, &world.building_records())?;
    write_hierarchy(&world.geography.hierarchy, &dir.join(HIERARCHY))?;
    Ok(out)
}

pub fn write_hierarchy(hierarchy: &PlaceHierarchy, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    hierarchy
        .write_to(BufWriter::new(file))
        .map_err(|e| Error::csv(path, e))
}

pub fn read_hierarchy(path: &Path) -> Result<PlaceHierarchy> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    PlaceHierarchy::read_from(std::io::BufReader::new(file)).map_err(|e| Error::format(path, e.to_string()))
}

pub fn label_stage(sessions: &Path, rules: &LabelRules, out: &Path) -> Result<LabelOutcome> {
    let sessions: Vec<SessionRecord> = read_csv(sessions)?;
    let outcome = label_sessions(&sessions, rules);
    write_csv_with_header(out, LABEL_HEADER, &outcome.labels)?;
    Ok(outcome)
}

pub fn features_stage(
    scans: &Path,
    sessions: &Path,
    buildings: &Path,
    config: &FeatureConfig,
    out: &Path,
) -> Result<FeatureTable> {
    let scans: Vec<ScanObservation> = read_csv(scans)?;
    let sessions: Vec<SessionRecord> = read_csv(sessions)?;
    let buildings: Vec<BuildingRecord> = read_csv(buildings)?;
    let table = extract_all(&scans, &sessions, &buildings, config);
    write_csv_with_header(out, &feature_header(), &table.records())?;
    Ok(table)
}

pub fn read_features(path: &Path) -> Result<BTreeMap<crate::records::ApId, crate::features::FeatureVector>> {
    let records: Vec<FeatureRecord> = read_csv(path)?;
    Ok(records.iter().map(|r| (r.ap_id, r.features())).collect())
}

pub fn read_model(path: &Path) -> Result<StumpEnsemble> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    StumpEnsemble::from_text(&text).map_err(|e| Error::format(path, e.to_string()))
}

/// Labeled APs that also have features.
pub fn training_samples(
    features: &BTreeMap<crate::records::ApId, crate::features::FeatureVector>,
    labels: &[ApLabel],
) -> Vec<Sample> {
    labels
        .iter()
        .filter_map(|l| {
            features
                .get(&l.ap_id)
                .map(|f| Sample::new(l.ap_id, f, l.label.is_positive()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub fold: String,
    pub precision: f64,
    pub recall: f64,
    pub n_test: usize,
}

/// Train on labeled features, write the model and, when `folds >= 2`, a
/// cross-validation report.
pub fn train_stage(
    features: &Path,
    labels: &Path,
    config: &TrainConfig,
    folds: usize,
    out: &Path,
    cv_out: Option<&Path>,
) -> Result<StumpEnsemble> {
    let features = read_features(features)?;
    let labels: Vec<ApLabel> = read_csv(labels)?;
    let samples = training_samples(&features, &labels);
    let model = train(&samples, config)?;
    std::fs::write(out, model.to_text()).map_err(|e| Error::io(out, e))?;
    if let (Some(path), true) = (cv_out, folds >= 2) {
        let report = cross_validate(&samples, folds, config)?;
        let mut rows: Vec<CvRow> = report
            .folds
            .iter()
            .enumerate()
            .map(|(i, f)| CvRow {
                fold: i.to_string(),
                precision: f.precision,
                recall: f.recall,
                n_test: f.n_test,
            })
            .collect();
        rows.push(CvRow {
            fold: "mean".into(),
            precision: report.mean_precision,
            recall: report.mean_recall,
            n_test: samples.len(),
        });
        write_csv_with_header(path, &["fold", "precision", "recall", "n_test"], &rows)?;
    }
    Ok(model)
}

pub struct DetectInputs<'a> {
    pub scans: &'a Path,
    pub features: &'a Path,
    pub model: &'a Path,
    pub trades: &'a Path,
}

pub fn detect_stage(
    inputs: &DetectInputs<'_>,
    geography: &Geography,
    config: &DetectConfig,
    moves_out: &Path,
    locations_out: &Path,
) -> Result<Detection> {
    let scans: Vec<ScanObservation> = read_csv(inputs.scans)?;
    let features = read_features(inputs.features)?;
    let model = read_model(inputs.model)?;
    let trades: Vec<TradeRecord> = read_csv(inputs.trades)?;
    let mut detection = run_detection(&scans, &features, &model, &trades, geography, config);
    detection.accepted.sort_by_key(|c| (c.ap_id, c.to_week));
    detection.locations.sort();
    write_csv_with_header::<MoveCandidate>(moves_out, MOVE_HEADER, &detection.accepted)?;
    write_csv_with_header::<FamilyLocation>(locations_out, LOCATION_HEADER, &detection.locations)?;
    Ok(detection)
}

/// Consecutive month pairs covered by the locations, plus the whole span
/// when it is longer than one month.
pub fn default_periods(locations: &[FamilyLocation]) -> Vec<(MonthIndex, MonthIndex)> {
    let Some(last_week) = locations.iter().map(|l| l.week.0).max() else {
        return Vec::new();
    };
    let last = last_week / WEEKS_PER_MONTH;
    let mut periods: Vec<_> = (0..last).map(|m| (MonthIndex(m), MonthIndex(m + 1))).collect();
    if last > 1 {
        periods.push((MonthIndex(0), MonthIndex(last)));
    }
    periods
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub from_month: MonthIndex,
    pub to_month: MonthIndex,
    pub origin_group: String,
    pub destination_group: String,
    pub intra: bool,
    pub count: u64,
    pub regularized: f64,
}

/// Roll weekly locations into flow matrices for every period and scale.
pub fn aggregate_stage(
    locations: &Path,
    hierarchy: &PlaceHierarchy,
    periods: &[(MonthIndex, MonthIndex)],
    scales: &[Scale],
    out: &Path,
    groups: Option<(&GroupSpec, &Path)>,
) -> Result<Vec<FlowMatrix>> {
    let locations: Vec<FamilyLocation> = read_csv(locations)?;
    let mut matrices = Vec::new();
    let mut group_rows = Vec::new();
    for &(from, to) in periods {
        let events = migrations_between(&locations, from, to)?;
        for &scale in scales {
            matrices.push(flow_matrix(&events, hierarchy, scale, from, to)?);
        }
        if let Some((spec, _)) = groups {
            let g = group_flows(&events, spec, hierarchy)?;
            for (dir, count) in &g.counts {
                let (origin_group, destination_group, intra) = match dir {
                    GroupDirection::Intra(n) => (n.clone(), n.clone(), true),
                    GroupDirection::Between(a, b) => (a.clone(), b.clone(), false),
                };
                group_rows.push(GroupRow {
                    from_month: from,
                    to_month: to,
                    origin_group,
                    destination_group,
                    intra,
                    count: *count,
                    regularized: g.regularized.get(dir).copied().unwrap_or(0.0),
                });
            }
        }
    }
    let records: Vec<FlowRecord> = matrices.iter().flat_map(FlowMatrix::records).collect();
    write_csv_with_header(out, FLOW_HEADER, &records)?;
    if let Some((_, path)) = groups {
        write_csv_with_header(
            path,
            &["from_month", "to_month", "origin_group", "destination_group", "intra", "count", "regularized"],
            &group_rows,
        )?;
    }
    Ok(matrices)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopRow {
    /// Position in the full descending order, from 1.
    pub rank: usize,
    pub code: String,
    pub name: String,
    pub raw: i64,
    /// Empty when the table could not be regularized.
    pub regularized: Option<f64>,
}

/// The `n_top` highest and `n_bottom` lowest places by net immigration, in
/// descending order, ties broken by place code. Overlapping requests return
/// each place once.
pub fn top_table(table: &NetImmigrationTable, n_top: usize, n_bottom: usize) -> Vec<TopRow> {
    let mut rows: Vec<_> = table.raw.iter().collect();
    rows.sort_by(|(pa, a), (pb, b)| b.cmp(a).then(pa.code().cmp(pb.code())));
    let n = rows.len();
    rows.into_iter()
        .enumerate()
        .filter(|(i, _)| *i < n_top || *i >= n.saturating_sub(n_bottom))
        .map(|(i, (place, raw))| TopRow {
            rank: i + 1,
            code: place.code().to_string(),
            name: String::new(),
            raw: *raw,
            regularized: table.regularized.get(place).copied(),
        })
        .collect()
}

/// The matrix spanning the most months at `scale`, earliest first on ties.
fn widest(matrices: &[FlowMatrix], scale: Scale) -> Option<&FlowMatrix> {
    matrices
        .iter()
        .filter(|m| m.scale == scale)
        .min_by_key(|m| (std::cmp::Reverse(m.to_month.0 - m.from_month.0), m.from_month))
}

/// Net-immigration tables per scale, the monthly series for the configured
/// place and the community density grid.
pub fn report_stage(
    flows: &Path,
    geography: &Geography,
    config: &ReportConfig,
    out_dir: &Path,
    series_out: Option<&Path>,
) -> Result<Vec<PathBuf>> {
    let records: Vec<FlowRecord> = read_csv(flows)?;
    let matrices = FlowMatrix::from_records(&records);
    let hierarchy = &geography.hierarchy;
    let mut written = Vec::new();

    for scale in Scale::ALL {
        let Some(m) = widest(&matrices, scale) else {
            continue;
        };
        let rows = match net_immigration(m) {
            Ok(table) => top_table(&table, config.n_top, config.n_bottom),
            Err(FlowError::EmptyFlow) => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        let rows: Vec<TopRow> = rows
            .into_iter()
            .map(|mut r| {
                r.name = hierarchy
                    .lookup(scale, &r.code)
                    .and_then(|p| hierarchy.name(p))
                    .unwrap_or("")
                    .to_string();
                r
            })
            .collect();
        let path = out_dir.join(net_table_file(scale));
        write_csv_with_header(&path, &["rank", "code", "name", "raw", "regularized"], &rows)?;
        written.push(path);
    }

    if let Some(m) = widest(&matrices, Scale::Community) {
        let path = out_dir.join(DENSITY);
        write_csv_with_header(&path, &["cell_row", "cell_col", "net_count"], &density_grid(m, geography))?;
        written.push(path);
    }

    if let Some(code) = &config.place {
        let place = hierarchy
            .find_code(code)
            .ok_or_else(|| Error::Config(format!("unknown place code {code}")))?;
        let monthly: Vec<FlowMatrix> = matrices
            .iter()
            .filter(|m| m.to_month.0 == m.from_month.0 + 1)
            .cloned()
            .collect();
        let series = if monthly.is_empty() {
            Vec::new()
        } else {
            time_series(&monthly, place)?
        };
        let path = series_out.map(Path::to_path_buf).unwrap_or_else(|| out_dir.join(SERIES));
        write_csv_with_header(
            &path,
            &["from_month", "to_month", "immigration", "emigration", "net", "total", "ratio", "zero_total"],
            &series,
        )?;
        written.push(path);
    }
    Ok(written)
}

fn timed<T>(
    manifest: &mut RunManifest,
    name: &str,
    inputs: &[&Path],
    outputs: impl FnOnce(&T) -> Vec<PathBuf>,
    body: impl FnOnce() -> Result<T>,
) -> Result<T> {
    let started = Instant::now();
    let input_digests = digest_files(inputs)?;
    let value = body().map_err(|e| {
        manifest.error = Some(format!("{name}: {e}"));
        e
    })?;
    let produced = outputs(&value);
    let refs: Vec<&Path> = produced.iter().map(PathBuf::as_path).collect();
    manifest.stages.push(StageRecord {
        name: name.to_string(),
        wall_ms: started.elapsed().as_millis(),
        inputs: input_digests,
        outputs: digest_files(&refs)?,
    });
    Ok(value)
}

/// Run every stage into `out_dir` and write `manifest.json` there, also on
/// failure (with `completed = false` and the error).
pub fn run_pipeline(config: &RunConfig, out_dir: &Path) -> Result<RunManifest> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut manifest = RunManifest::new(&config.canonical(), config.seed);
    let result = run_stages(config, out_dir, &mut manifest);
    if let Err(e) = &result {
        if manifest.error.is_none() {
            manifest.error = Some(e.to_string());
        }
    }
    manifest.completed = result.is_ok();
    manifest.write(&out_dir.join(MANIFEST))?;
    result.map(|_| manifest)
}

fn run_stages(config: &RunConfig, dir: &Path, manifest: &mut RunManifest) -> Result<()> {
    let geography = Geography::new(config.world.clone())?;
    let p = |name: &str| dir.join(name);

    let (scans, sessions, trades, buildings) = match &config.inputs {
        Some(inputs) => {
            for path in [&inputs.scans, &inputs.sessions, &inputs.trades, &inputs.buildings] {
                if !path.is_file() {
                    let err = Error::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"));
                    manifest.error = Some(format!("inputs: {err}"));
                    return Err(err);
                }
            }
            write_hierarchy(&geography.hierarchy, &p(HIERARCHY))?;
            (inputs.scans.clone(), inputs.sessions.clone(), inputs.trades.clone(), inputs.buildings.clone())
        }
        None => {
            timed(
                manifest,
                "simulate",
                &[],
                |_| [SCANS, SESSIONS, TRADES, TRUTH, BUILDINGS, HIERARCHY].map(p).to_vec(),
                || simulate_stage(&config.sim, dir),
            )?;
            (p(SCANS), p(SESSIONS), p(TRADES), p(BUILDINGS))
        }
    };

    timed(manifest, "label", &[&sessions], |_| vec![p(LABELS)], || {
        label_stage(&sessions, &config.label, &p(LABELS))
    })?;
    timed(manifest, "features", &[&scans, &sessions, &buildings], |_| vec![p(FEATURES)], || {
        features_stage(&scans, &sessions, &buildings, &config.features, &p(FEATURES))
    })?;
    let cv_path = p(CV);
    timed(
        manifest,
        "train",
        &[&p(FEATURES), &p(LABELS)],
        |_| {
            if config.cv.folds >= 2 {
                vec![p(MODEL), p(CV)]
            } else {
                vec![p(MODEL)]
            }
        },
        || train_stage(&p(FEATURES), &p(LABELS), &config.train, config.cv.folds, &p(MODEL), Some(&cv_path)),
    )?;
    let inputs = DetectInputs {
        scans: &scans,
        features: &p(FEATURES),
        model: &p(MODEL),
        trades: &trades,
    };
    let detection = timed(
        manifest,
        "detect",
        &[&scans, &p(FEATURES), &p(MODEL), &trades],
        |_| vec![p(MOVES), p(LOCATIONS)],
        || detect_stage(&inputs, &geography, &config.detect, &p(MOVES), &p(LOCATIONS)),
    )?;

    let groups = match &config.aggregate.groups_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Some(GroupSpec::parse(&text, &geography.hierarchy)?)
        }
        None => None,
    };
    let periods = default_periods(&detection.locations);
    let group_path = p(GROUPS);
    timed(
        manifest,
        "aggregate",
        &[&p(LOCATIONS)],
        |_| {
            let mut v = vec![p(FLOWS)];
            if groups.is_some() {
                v.push(p(GROUPS));
            }
            v
        },
        || {
            aggregate_stage(
                &p(LOCATIONS),
                &geography.hierarchy,
                &periods,
                &config.aggregate.scales,
                &p(FLOWS),
                groups.as_ref().map(|g| (g, group_path.as_path())),
            )
        },
    )?;
    timed(manifest, "report", &[&p(FLOWS)], |written: &Vec<PathBuf>| written.clone(), || {
        report_stage(&p(FLOWS), &geography, &config.report, dir, None)
    })?;
    Ok(())
}

/// Every analysis stage run in memory on simulator output.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub labels: LabelOutcome,
    pub features: FeatureTable,
    pub model: StumpEnsemble,
    pub detection: Detection,
}

pub fn analyze(out: &SimOutput, config: &RunConfig) -> Result<Analysis> {
    let labels = label_sessions(&out.sessions, &config.label);
    let features = extract_all(
        &out.scans,
        &out.sessions,
        &out.final_world.building_records(),
        &config.features,
    );
    let samples = training_samples(&features.features, &labels.labels);
    let model = train(&samples, &config.train)?;
    let detection = run_detection(
        &out.scans,
        &features.features,
        &model,
        &out.trades,
        &out.final_world.geography,
        &config.detect,
    );
    Ok(Analysis {
        labels,
        features,
        model,
        detection,
    })
}

/// Weeks covered by a scan log.
pub fn weeks_in(scans: &[ScanObservation]) -> u32 {
    scans.iter().map(|s| week_of(s.timestamp).0 + 1).max().unwrap_or(0)
}

/// Geography for a layout, reported as a configuration error when invalid.
pub fn geography_for(layout: &WorldLayout) -> Result<Geography> {
    Geography::new(layout.clone()).map_err(|e| Error::Config(e.to_string()))
}
