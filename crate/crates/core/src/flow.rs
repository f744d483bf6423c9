//! Monthly snapshots, migration events and origin-destination tables.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::detect::FamilyLocation;
use crate::geo::{Geography, GeoError, MonthIndex, PlaceHierarchy, PlaceId, Scale};
use crate::records::ApId;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FlowError {
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error("flow matrix has no entries")]
    EmptyFlow,
    #[error("period must go forward in time: {from} -> {to}")]
    BadPeriod { from: MonthIndex, to: MonthIndex },
    #[error("group spec line {line}: {reason}")]
    GroupSpec { line: usize, reason: String },
    #[error("city {city} belongs to both {first} and {second}")]
    GroupOverlap { city: String, first: String, second: String },
    #[error("time series needs at least one period")]
    NoPeriods,
}

pub type Snapshot = BTreeMap<ApId, PlaceId>;

/// Where each family was at the end of `month`: the latest week in the
/// month with a record wins; families with no record that month are absent.
pub fn monthly_snapshot(locations: &[FamilyLocation], month: MonthIndex) -> Snapshot {
    let weeks = month.weeks();
    let mut latest: BTreeMap<ApId, (u32, &PlaceId)> = BTreeMap::new();
    for loc in locations.iter().filter(|l| weeks.contains(&l.week.0)) {
        let entry = latest.entry(loc.family_id).or_insert((loc.week.0, &loc.place));
        if loc.week.0 >= entry.0 {
            *entry = (loc.week.0, &loc.place);
        }
    }
    latest.into_iter().map(|(f, (_, p))| (f, p.clone())).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MigrationEvent {
    pub family_id: ApId,
    pub from_month: MonthIndex,
    pub to_month: MonthIndex,
    pub origin: PlaceId,
    pub destination: PlaceId,
}

/// Left join of the earlier snapshot onto the later one: a family present in
/// both at different places yields an event; families missing from either
/// side yield nothing.
pub fn derive_migrations(
    earlier: &Snapshot,
    later: &Snapshot,
    from_month: MonthIndex,
    to_month: MonthIndex,
) -> Result<Vec<MigrationEvent>, FlowError> {
    if to_month <= from_month {
        return Err(FlowError::BadPeriod {
            from: from_month,
            to: to_month,
        });
    }
    Ok(earlier
        .iter()
        .filter_map(|(family, origin)| {
            let destination = later.get(family)?;
            (destination != origin).then(|| MigrationEvent {
                family_id: *family,
                from_month,
                to_month,
                origin: origin.clone(),
                destination: destination.clone(),
            })
        })
        .collect())
}

/// Events between two months, straight from weekly locations.
pub fn migrations_between(
    locations: &[FamilyLocation],
    from_month: MonthIndex,
    to_month: MonthIndex,
) -> Result<Vec<MigrationEvent>, FlowError> {
    derive_migrations(
        &monthly_snapshot(locations, from_month),
        &monthly_snapshot(locations, to_month),
        from_month,
        to_month,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix {
    pub scale: Scale,
    pub from_month: MonthIndex,
    pub to_month: MonthIndex,
    /// Moves between distinct places at `scale`.
    pub counts: BTreeMap<(PlaceId, PlaceId), u64>,
    /// Moves that stay inside one place at `scale`.
    pub intra: BTreeMap<PlaceId, u64>,
}

impl FlowMatrix {
    pub fn empty(scale: Scale, from_month: MonthIndex, to_month: MonthIndex) -> Self {
        Self {
            scale,
            from_month,
            to_month,
            counts: BTreeMap::new(),
            intra: BTreeMap::new(),
        }
    }

    pub fn immigration(&self, place: &PlaceId) -> u64 {
        self.counts.iter().filter(|((_, d), _)| d == place).map(|(_, c)| c).sum()
    }

    pub fn emigration(&self, place: &PlaceId) -> u64 {
        self.counts.iter().filter(|((o, _), _)| o == place).map(|(_, c)| c).sum()
    }

    pub fn total_inter(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Pointwise sum with another matrix over the same scale and period.
    pub fn merge(&mut self, other: &FlowMatrix) {
        assert_eq!(
            (self.scale, self.from_month, self.to_month),
            (other.scale, other.from_month, other.to_month),
            "merging flow matrices over different scales or periods"
        );
        for (k, v) in &other.counts {
            *self.counts.entry(k.clone()).or_default() += v;
        }
        for (k, v) in &other.intra {
            *self.intra.entry(k.clone()).or_default() += v;
        }
    }

    /// Flat rows for `flows.csv`.
    pub fn records(&self) -> Vec<FlowRecord> {
        let inter = self.counts.iter().map(|((o, d), c)| (FlowKind::Inter, o, d, *c));
        let intra = self.intra.iter().map(|(p, c)| (FlowKind::Intra, p, p, *c));
        inter
            .chain(intra)
            .map(|(kind, o, d, count)| FlowRecord {
                scale: self.scale,
                from_month: self.from_month,
                to_month: self.to_month,
                kind,
                origin: o.code().to_string(),
                destination: d.code().to_string(),
                count,
            })
            .collect()
    }

    /// Rebuild matrices from `flows.csv` rows, one per (scale, period).
    pub fn from_records(records: &[FlowRecord]) -> Vec<FlowMatrix> {
        let mut out: BTreeMap<(Scale, MonthIndex, MonthIndex), FlowMatrix> = BTreeMap::new();
        for r in records {
            let m = out
                .entry((r.scale, r.from_month, r.to_month))
                .or_insert_with(|| FlowMatrix::empty(r.scale, r.from_month, r.to_month));
            let o = PlaceId::new(r.scale, &r.origin);
            match r.kind {
                FlowKind::Inter => {
                    *m.counts.entry((o, PlaceId::new(r.scale, &r.destination))).or_default() += r.count;
                }
                FlowKind::Intra => *m.intra.entry(o).or_default() += r.count,
            }
        }
        out.into_values().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowKind {
    Inter,
    Intra,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub scale: Scale,
    pub from_month: MonthIndex,
    pub to_month: MonthIndex,
    pub kind: FlowKind,
    pub origin: String,
    pub destination: String,
    pub count: u64,
}

/// Roll events up to `scale`.
pub fn flow_matrix(
    events: &[MigrationEvent],
    hierarchy: &PlaceHierarchy,
    scale: Scale,
    from_month: MonthIndex,
    to_month: MonthIndex,
) -> Result<FlowMatrix, FlowError> {
    let mut m = FlowMatrix::empty(scale, from_month, to_month);
    for e in events {
        let o = hierarchy.resolve_scale(&e.origin, scale)?;
        let d = hierarchy.resolve_scale(&e.destination, scale)?;
        if o == d {
            *m.intra.entry(o).or_default() += 1;
        } else {
            *m.counts.entry((o, d)).or_default() += 1;
        }
    }
    Ok(m)
}

/// Divide by the column maximum. Returns `None` when the maximum is not
/// positive, in which case the values cannot be put on the usual scale.
pub fn regularize<K: Ord + Clone>(raw: &BTreeMap<K, i64>) -> Option<BTreeMap<K, f64>> {
    let max = *raw.values().max()?;
    if max <= 0 {
        return None;
    }
    Some(raw.iter().map(|(k, v)| (k.clone(), *v as f64 / max as f64)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetImmigrationTable {
    pub scale: Scale,
    pub from_month: MonthIndex,
    pub to_month: MonthIndex,
    pub raw: BTreeMap<PlaceId, i64>,
    /// Empty when `regularization_skipped`.
    pub regularized: BTreeMap<PlaceId, f64>,
    pub regularization_skipped: bool,
}

impl NetImmigrationTable {
    pub fn from_raw(scale: Scale, from_month: MonthIndex, to_month: MonthIndex, raw: BTreeMap<PlaceId, i64>) -> Self {
        let regularized = regularize(&raw);
        Self {
            scale,
            from_month,
            to_month,
            regularization_skipped: regularized.is_none(),
            regularized: regularized.unwrap_or_default(),
            raw,
        }
    }
}

/// Immigration minus emigration for every place touched by the flow.
pub fn net_immigration(flow: &FlowMatrix) -> Result<NetImmigrationTable, FlowError> {
    if flow.counts.is_empty() {
        return Err(FlowError::EmptyFlow);
    }
    let mut raw: BTreeMap<PlaceId, i64> = BTreeMap::new();
    for ((o, d), c) in &flow.counts {
        *raw.entry(o.clone()).or_default() -= *c as i64;
        *raw.entry(d.clone()).or_default() += *c as i64;
    }
    Ok(NetImmigrationTable::from_raw(flow.scale, flow.from_month, flow.to_month, raw))
}

/// Named, pairwise disjoint sets of cities.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroupSpec {
    pub groups: BTreeMap<String, BTreeSet<PlaceId>>,
}

impl GroupSpec {
    /// Parses `group_name:city_code,city_code,...` lines. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn parse(text: &str, hierarchy: &PlaceHierarchy) -> Result<Self, FlowError> {
        let mut spec = GroupSpec::default();
        let mut owner: BTreeMap<PlaceId, String> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| FlowError::GroupSpec { line: i + 1, reason };
            let (name, cities) = line
                .split_once(':')
                .ok_or_else(|| err("expected `name:city,city,...`".into()))?;
            let name = name.trim().to_string();
            if name.is_empty() {
                return Err(err("empty group name".into()));
            }
            if spec.groups.contains_key(&name) {
                return Err(err(format!("group {name} defined twice")));
            }
            let mut members = BTreeSet::new();
            for code in cities.split(',').map(str::trim).filter(|c| !c.is_empty()) {
                let city = hierarchy
                    .lookup(Scale::City, code)
                    .ok_or_else(|| err(format!("unknown city {code}")))?
                    .clone();
                if let Some(first) = owner.get(&city) {
                    if *first != name {
                        return Err(FlowError::GroupOverlap {
                            city: code.to_string(),
                            first: first.clone(),
                            second: name,
                        });
                    }
                }
                owner.insert(city.clone(), name.clone());
                members.insert(city);
            }
            if members.is_empty() {
                return Err(err(format!("group {name} has no cities")));
            }
            spec.groups.insert(name, members);
        }
        Ok(spec)
    }

    pub fn group_of(&self, city: &PlaceId) -> Option<&str> {
        self.groups
            .iter()
            .find(|(_, members)| members.contains(city))
            .map(|(name, _)| name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupDirection {
    Intra(String),
    Between(String, String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupFlows {
    pub counts: BTreeMap<GroupDirection, u64>,
    pub regularized: BTreeMap<GroupDirection, f64>,
}

/// Flows between and within city groups. Events touching a city outside
/// every group, and moves inside a single city, are ignored.
pub fn group_flows(
    events: &[MigrationEvent],
    groups: &GroupSpec,
    hierarchy: &PlaceHierarchy,
) -> Result<GroupFlows, FlowError> {
    let mut counts: BTreeMap<GroupDirection, u64> = BTreeMap::new();
    for e in events {
        let o = hierarchy.resolve_scale(&e.origin, Scale::City)?;
        let d = hierarchy.resolve_scale(&e.destination, Scale::City)?;
        if o == d {
            continue;
        }
        let (Some(go), Some(gd)) = (groups.group_of(&o), groups.group_of(&d)) else {
            continue;
        };
        let dir = if go == gd {
            GroupDirection::Intra(go.to_string())
        } else {
            GroupDirection::Between(go.to_string(), gd.to_string())
        };
        *counts.entry(dir).or_default() += 1;
    }
    let as_signed: BTreeMap<GroupDirection, i64> = counts.iter().map(|(k, v)| (k.clone(), *v as i64)).collect();
    Ok(GroupFlows {
        regularized: regularize(&as_signed).unwrap_or_default(),
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub from_month: MonthIndex,
    pub to_month: MonthIndex,
    pub immigration: u64,
    pub emigration: u64,
    pub net: i64,
    pub total: u64,
    pub ratio: f64,
    /// Set when `total` is zero and `ratio` was defaulted to 0.
    pub zero_total: bool,
}

/// Net and total inter-place migration of `place`, one point per matrix,
/// in period order. `place` must be at the matrices' scale.
pub fn time_series(flows: &[FlowMatrix], place: &PlaceId) -> Result<Vec<SeriesPoint>, FlowError> {
    if flows.is_empty() {
        return Err(FlowError::NoPeriods);
    }
    let mut sorted: Vec<&FlowMatrix> = flows.iter().filter(|m| m.scale == place.scale).collect();
    sorted.sort_by_key(|m| (m.from_month, m.to_month));
    Ok(sorted
        .into_iter()
        .map(|m| {
            let immigration = m.immigration(place);
            let emigration = m.emigration(place);
            let total = immigration + emigration;
            let net = immigration as i64 - emigration as i64;
            SeriesPoint {
                from_month: m.from_month,
                to_month: m.to_month,
                immigration,
                emigration,
                net,
                total,
                ratio: if total == 0 { 0.0 } else { net as f64 / total as f64 },
                zero_total: total == 0,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityCell {
    pub cell_row: u32,
    pub cell_col: u32,
    pub net_count: i64,
}

/// Net immigration on the community grid, one row per community in
/// row-major order. `flow` must be at community scale.
pub fn density_grid(flow: &FlowMatrix, geography: &Geography) -> Vec<DensityCell> {
    assert_eq!(flow.scale, Scale::Community, "density grid needs community flows");
    let mut net: BTreeMap<&PlaceId, i64> = BTreeMap::new();
    for ((o, d), c) in &flow.counts {
        *net.entry(o).or_default() -= *c as i64;
        *net.entry(d).or_default() += *c as i64;
    }
    let mut cells: Vec<DensityCell> = geography
        .communities()
        .iter()
        .enumerate()
        .map(|(i, place)| {
            let (col, row) = geography.community_position(i);
            DensityCell {
                cell_row: row,
                cell_col: col,
                net_count: net.get(place).copied().unwrap_or(0),
            }
        })
        .collect();
    cells.sort_by_key(|c| (c.cell_row, c.cell_col));
    cells
}
