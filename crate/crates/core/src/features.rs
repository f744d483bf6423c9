//! Per-AP feature records for the residential classifier.
//!
//! Each AP gets its two most likely buildings (with the reverse-geocoded
//! property type of each), the number of distinct terminals that connected
//! to it, its total and peak-concurrent connection counts, and a day/night
//! usage ratio.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::geo::Point;
use crate::records::{ApId, BuildingId, BuildingRecord, ScanObservation, SessionRecord, TerminalId};

const HOUR: i64 = 3600;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FeatureError {
    #[error("AP {0} has no scan observations")]
    NoObservations(ApId),
}

/// Reverse-geocoded building property. Nominal: the codes carry no order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum PropertyType {
    Office = 0,
    Residential = 1,
    Mixture = 2,
    Uncertain = 3,
}

impl From<PropertyType> for u8 {
    fn from(p: PropertyType) -> u8 {
        p as u8
    }
}

impl TryFrom<u8> for PropertyType {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(PropertyType::Office),
            1 => Ok(PropertyType::Residential),
            2 => Ok(PropertyType::Mixture),
            3 => Ok(PropertyType::Uncertain),
            _ => Err(format!("property type {v} not in 0..=3")),
        }
    }
}

impl PropertyType {
    /// Most likely type of a building; ties go to the lower code.
    pub fn of(dist: &[f64; 4]) -> Self {
        let mut best = 0;
        for i in 1..4 {
            if dist[i] > dist[best] {
                best = i;
            }
        }
        PropertyType::try_from(best as u8).expect("index below 4")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub prop1_type: PropertyType,
    pub prop1_prob: f64,
    pub prop2_type: PropertyType,
    pub prop2_prob: f64,
    pub terminal_history: u32,
    pub accumulated_connections: u32,
    pub max_simultaneous: u32,
    pub day_night_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Nominal,
    Numeric,
}

pub const N_FEATURES: usize = 8;

/// Kind of each entry of [`FeatureVector::values`].
pub const FEATURE_KINDS: [FeatureKind; N_FEATURES] = [
    FeatureKind::Nominal,
    FeatureKind::Numeric,
    FeatureKind::Nominal,
    FeatureKind::Numeric,
    FeatureKind::Numeric,
    FeatureKind::Numeric,
    FeatureKind::Numeric,
    FeatureKind::Numeric,
];

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "prop1_type",
    "prop1_prob",
    "prop2_type",
    "prop2_prob",
    "terminal_history",
    "accumulated_connections",
    "max_simultaneous",
    "day_night_ratio",
];

impl FeatureVector {
    /// Field values in declaration order; nominal fields as their codes.
    pub fn values(&self) -> [f64; N_FEATURES] {
        [
            self.prop1_type as u8 as f64,
            self.prop1_prob,
            self.prop2_type as u8 as f64,
            self.prop2_prob,
            self.terminal_history as f64,
            self.accumulated_connections as f64,
            self.max_simultaneous as f64,
            self.day_night_ratio,
        ]
    }
}

/// One line of `features.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub ap_id: ApId,
    pub prop1_type: PropertyType,
    pub prop1_prob: f64,
    pub prop2_type: PropertyType,
    pub prop2_prob: f64,
    pub terminal_history: u32,
    pub accumulated_connections: u32,
    pub max_simultaneous: u32,
    pub day_night_ratio: f64,
}

impl FeatureRecord {
    pub fn new(ap_id: ApId, f: &FeatureVector) -> Self {
        Self {
            ap_id,
            prop1_type: f.prop1_type,
            prop1_prob: f.prop1_prob,
            prop2_type: f.prop2_type,
            prop2_prob: f.prop2_prob,
            terminal_history: f.terminal_history,
            accumulated_connections: f.accumulated_connections,
            max_simultaneous: f.max_simultaneous,
            day_night_ratio: f.day_night_ratio,
        }
    }

    pub fn features(&self) -> FeatureVector {
        FeatureVector {
            prop1_type: self.prop1_type,
            prop1_prob: self.prop1_prob,
            prop2_type: self.prop2_type,
            prop2_prob: self.prop2_prob,
            terminal_history: self.terminal_history,
            accumulated_connections: self.accumulated_connections,
            max_simultaneous: self.max_simultaneous,
            day_night_ratio: self.day_night_ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Buildings farther than this from an observation get no mass from it.
    pub candidate_radius_m: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            candidate_radius_m: 60.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildingCandidate {
    /// `None` for padding entries.
    pub building: Option<BuildingId>,
    pub property: PropertyType,
    pub probability: f64,
}

impl BuildingCandidate {
    const PADDING: BuildingCandidate = BuildingCandidate {
        building: None,
        property: PropertyType::Uncertain,
        probability: 0.0,
    };
}

/// Bucketed lookup of buildings near a point.
#[derive(Debug, Clone)]
pub struct BuildingIndex {
    buildings: Vec<BuildingRecord>,
    bucket_m: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl BuildingIndex {
    pub fn new(buildings: &[BuildingRecord], bucket_m: f64) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let mut sorted = buildings.to_vec();
        sorted.sort_by_key(|b| b.building_id);
        for (i, b) in sorted.iter().enumerate() {
            buckets
                .entry(Self::key(&b.location(), bucket_m))
                .or_default()
                .push(i);
        }
        Self {
            buildings: sorted,
            bucket_m,
            buckets,
        }
    }

    fn key(p: &Point, bucket_m: f64) -> (i64, i64) {
        ((p.x / bucket_m).floor() as i64, (p.y / bucket_m).floor() as i64)
    }

    /// Buildings within `radius` of `p`, in id order.
    pub fn within(&self, p: &Point, radius: f64) -> Vec<(&BuildingRecord, f64)> {
        let reach = (radius / self.bucket_m).ceil() as i64;
        let (kx, ky) = Self::key(p, self.bucket_m);
        let mut found = Vec::new();
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                if let Some(ids) = self.buckets.get(&(kx + dx, ky + dy)) {
                    for &i in ids {
                        let b = &self.buildings[i];
                        let d = b.location().distance(p);
                        if d <= radius {
                            found.push((i, d));
                        }
                    }
                }
            }
        }
        found.sort_by_key(|(i, _)| *i);
        found.into_iter().map(|(i, d)| (&self.buildings[i], d)).collect()
    }
}

fn canonical_scan_order(a: &ScanObservation, b: &ScanObservation) -> std::cmp::Ordering {
    (a.timestamp, a.scanner_id, a.ap_id)
        .cmp(&(b.timestamp, b.scanner_id, b.ap_id))
        .then(a.x.total_cmp(&b.x))
        .then(a.y.total_cmp(&b.y))
        .then(a.rssi.total_cmp(&b.rssi))
}

/// Top-2 buildings for one AP's observations, by RSSI-weighted
/// inverse-distance mass, padded with `(uncertain, 0.0)`.
pub fn assign_buildings(
    ap_id: ApId,
    scans: &[&ScanObservation],
    index: &BuildingIndex,
    config: &FeatureConfig,
) -> Result<[BuildingCandidate; 2], FeatureError> {
    if scans.is_empty() {
        return Err(FeatureError::NoObservations(ap_id));
    }
    let mut ordered = scans.to_vec();
    ordered.sort_by(|a, b| canonical_scan_order(a, b));

    let mut mass: BTreeMap<BuildingId, (f64, PropertyType)> = BTreeMap::new();
    for obs in ordered {
        for (b, d) in index.within(&obs.location(), config.candidate_radius_m) {
            let entry = mass
                .entry(b.building_id)
                .or_insert((0.0, PropertyType::of(&b.property_dist())));
            entry.0 += obs.rssi.max(0.0) / (d + 1.0);
        }
    }
    let total: f64 = mass.values().map(|(m, _)| m).sum();
    let mut ranked: Vec<BuildingCandidate> = if total > 0.0 {
        mass.into_iter()
            .map(|(id, (m, property))| BuildingCandidate {
                building: Some(id),
                property,
                probability: m / total,
            })
            .collect()
    } else {
        Vec::new()
    };
    ranked.sort_by(|a, b| b.probability.total_cmp(&a.probability).then(a.building.cmp(&b.building)));
    let first = ranked.first().copied().unwrap_or(BuildingCandidate::PADDING);
    let second = ranked.get(1).copied().unwrap_or(BuildingCandidate::PADDING);
    Ok([first, second])
}

/// Hour-of-day slots a session touches, split into the day window
/// (10:00-16:00) and the night window (22:00-06:00).
fn window_hours(s: &SessionRecord) -> (u64, u64) {
    let (mut day, mut night) = (0, 0);
    let first = s.connect_ts.div_euclid(HOUR);
    let last = (s.disconnect_ts - 1).div_euclid(HOUR);
    for h in first..=last {
        match h.rem_euclid(24) {
            10..=15 => day += 1,
            22 | 23 | 0..=5 => night += 1,
            _ => {}
        }
    }
    (day, night)
}

/// Day-window hour count over night-window hour count plus one.
pub fn day_night_ratio(sessions: &[&SessionRecord]) -> f64 {
    let (day, night) = sessions
        .iter()
        .filter(|s| s.is_well_formed())
        .map(|s| window_hours(s))
        .fold((0u64, 0u64), |(d, n), (a, b)| (d + a, n + b));
    ratio_from_counts(day, night)
}

pub fn ratio_from_counts(day: u64, night: u64) -> f64 {
    day as f64 / (night as f64 + 1.0)
}

/// Peak number of concurrently open sessions. Intervals are half-open, so a
/// session ending exactly when another starts does not overlap it.
pub fn max_simultaneous(sessions: &[&SessionRecord]) -> u32 {
    let mut events: Vec<(i64, i32)> = sessions
        .iter()
        .filter(|s| s.is_well_formed())
        .flat_map(|s| [(s.connect_ts, 1), (s.disconnect_ts, -1)])
        .collect();
    events.sort();
    let (mut open, mut peak) = (0i32, 0i32);
    for (_, delta) in events {
        open += delta;
        peak = peak.max(open);
    }
    peak as u32
}

/// Full feature record for one AP.
pub fn extract(
    ap_id: ApId,
    scans: &[&ScanObservation],
    sessions: &[&SessionRecord],
    index: &BuildingIndex,
    config: &FeatureConfig,
) -> Result<FeatureVector, FeatureError> {
    let [first, second] = assign_buildings(ap_id, scans, index, config)?;
    let valid: Vec<&SessionRecord> = sessions.iter().copied().filter(|s| s.is_well_formed()).collect();
    let mut terminals: Vec<TerminalId> = valid.iter().map(|s| s.terminal_id).collect();
    terminals.sort();
    terminals.dedup();
    Ok(FeatureVector {
        prop1_type: first.property,
        prop1_prob: first.probability,
        prop2_type: second.property,
        prop2_prob: second.probability,
        terminal_history: terminals.len() as u32,
        accumulated_connections: valid.len() as u32,
        max_simultaneous: max_simultaneous(&valid),
        day_night_ratio: day_night_ratio(&valid),
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureTable {
    pub features: BTreeMap<ApId, FeatureVector>,
    /// APs seen only in sessions, never scanned.
    pub excluded: Vec<ApId>,
}

impl FeatureTable {
    pub fn records(&self) -> Vec<FeatureRecord> {
        self.features
            .iter()
            .map(|(id, f)| FeatureRecord::new(*id, f))
            .collect()
    }
}

/// Features for every AP appearing in the scans or sessions.
pub fn extract_all(
    scans: &[ScanObservation],
    sessions: &[SessionRecord],
    buildings: &[BuildingRecord],
    config: &FeatureConfig,
) -> FeatureTable {
    let index = BuildingIndex::new(buildings, config.candidate_radius_m.max(1.0));
    let mut scans_by_ap: BTreeMap<ApId, Vec<&ScanObservation>> = BTreeMap::new();
    for s in scans {
        scans_by_ap.entry(s.ap_id).or_default().push(s);
    }
    let mut sessions_by_ap: BTreeMap<ApId, Vec<&SessionRecord>> = BTreeMap::new();
    for s in sessions {
        sessions_by_ap.entry(s.ap_id).or_default().push(s);
    }
    let mut table = FeatureTable::default();
    for (ap, ap_scans) in &scans_by_ap {
        let ap_sessions = sessions_by_ap.get(ap).map(Vec::as_slice).unwrap_or(&[]);
        let fv = extract(*ap, ap_scans, ap_sessions, &index, config)
            .expect("grouped scans are non-empty");
        table.features.insert(*ap, fv);
    }
    table.excluded = sessions_by_ap
        .keys()
        .filter(|ap| !scans_by_ap.contains_key(ap))
        .copied()
        .collect();
    table
}
