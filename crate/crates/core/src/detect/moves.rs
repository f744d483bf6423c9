//! Move candidates, pseudo-migration filters and family location tracks.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::geo::{week_of, Geography, GridCell, PlaceId, WeekIndex};
use crate::records::{ApId, ScanObservation, TradeRecord};

use super::fingerprint::{cosine_similarity, Fingerprint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectConfig {
    pub similarity_threshold: f64,
    pub min_obs: usize,
    /// Longest run of weeks without a fingerprint that still counts as consecutive.
    pub max_gap: u32,
    pub trade_window_weeks: u32,
    pub pocket_radius_m: f64,
    pub residential_threshold: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            similarity_threshold: 0.1,
            min_obs: 3,
            max_gap: 2,
            trade_window_weeks: 2,
            pocket_radius_m: 5000.0,
            residential_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveCandidate {
    pub ap_id: ApId,
    pub from_week: WeekIndex,
    pub to_week: WeekIndex,
    pub similarity: f64,
    pub origin: PlaceId,
    pub destination: PlaceId,
}

/// Compare each AP's fingerprint with its previous one (if no more than
/// `max_gap` weeks back) and emit a candidate when the prints disagree and
/// the anchor cells sit in different communities.
pub fn detect_moves(
    fingerprints: &BTreeMap<ApId, Vec<Fingerprint>>,
    geography: &Geography,
    config: &DetectConfig,
) -> Vec<MoveCandidate> {
    let mut out = Vec::new();
    for prints in fingerprints.values() {
        for pair in prints.windows(2) {
            let (prev, cur) = (&pair[0], &pair[1]);
            if cur.week.0 - prev.week.0 > config.max_gap + 1 {
                continue;
            }
            let similarity = cosine_similarity(prev, cur);
            if similarity >= config.similarity_threshold {
                continue;
            }
            let origin = community(geography, prev.anchor_cell);
            let destination = community(geography, cur.anchor_cell);
            if origin != destination {
                out.push(MoveCandidate {
                    ap_id: cur.ap_id,
                    from_week: prev.week,
                    to_week: cur.week,
                    similarity,
                    origin,
                    destination,
                });
            }
        }
    }
    out
}

fn community(geography: &Geography, cell: GridCell) -> PlaceId {
    geography
        .community_of_cell(cell)
        .expect("fingerprint cells come from in-bounds scans")
        .clone()
}

/// APs seen in some week at three cells pairwise at least `radius_m` apart.
pub fn pocket_aps(scans: &[ScanObservation], geography: &Geography, radius_m: f64) -> BTreeSet<ApId> {
    let cell_size = geography.layout.cell_size_m;
    let mut cells: BTreeMap<(ApId, WeekIndex), BTreeSet<GridCell>> = BTreeMap::new();
    for s in scans {
        if let Ok(c) = geography.cell_of(&s.location()) {
            cells.entry((s.ap_id, week_of(s.timestamp))).or_default().insert(c);
        }
    }
    let mut pockets = BTreeSet::new();
    for ((ap, _), set) in cells {
        if pockets.contains(&ap) || set.len() < 3 {
            continue;
        }
        let pts: Vec<_> = set.iter().map(|c| c.center(cell_size)).collect();
        let far = |i: usize, j: usize| pts[i].distance(&pts[j]) >= radius_m;
        let n = pts.len();
        let found = (0..n).any(|i| {
            (i + 1..n).any(|j| far(i, j) && (j + 1..n).any(|k| far(i, k) && far(j, k)))
        });
        if found {
            pockets.insert(ap);
        }
    }
    pockets
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Filter {
    /// Candidate's AP changed hands near the move.
    Trade,
    /// Classifier says the AP is not residential.
    NonResidential,
    /// The AP roams like a pocket hotspot.
    Pocket,
}

impl Filter {
    pub const ALL: [Filter; 3] = [Filter::Trade, Filter::NonResidential, Filter::Pocket];
}

/// Everything the filters need to judge a candidate.
#[derive(Debug, Clone, Default)]
pub struct FilterContext {
    /// Trade weeks per AP.
    pub trades: BTreeMap<ApId, Vec<WeekIndex>>,
    /// Residential probability per AP; APs without one count as non-residential.
    pub residential_proba: BTreeMap<ApId, f64>,
    pub pockets: BTreeSet<ApId>,
    pub trade_window_weeks: u32,
    pub residential_threshold: f64,
}

impl FilterContext {
    pub fn with_trades(mut self, trades: &[TradeRecord]) -> Self {
        for t in trades {
            self.trades.entry(t.ap_id).or_default().push(t.week);
        }
        self
    }

    pub fn is_residential(&self, ap: ApId) -> bool {
        self.residential_proba
            .get(&ap)
            .is_some_and(|&p| p >= self.residential_threshold)
    }

    /// True when `filter` removes the candidate.
    pub fn rejects(&self, filter: Filter, c: &MoveCandidate) -> bool {
        match filter {
            Filter::Trade => self.trades.get(&c.ap_id).is_some_and(|weeks| {
                let lo = c.from_week.0.saturating_sub(self.trade_window_weeks);
                let hi = c.to_week.0 + self.trade_window_weeks;
                weeks.iter().any(|w| (lo..=hi).contains(&w.0))
            }),
            Filter::NonResidential => !self.is_residential(c.ap_id),
            Filter::Pocket => self.pockets.contains(&c.ap_id),
        }
    }

    /// Candidates that survive every filter in `filters`. Each filter is a
    /// predicate on a single candidate, so the order of `filters` is irrelevant.
    pub fn apply(&self, candidates: &[MoveCandidate], filters: &[Filter]) -> Vec<MoveCandidate> {
        candidates
            .iter()
            .filter(|c| !filters.iter().any(|&f| self.rejects(f, c)))
            .cloned()
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FamilyLocation {
    pub family_id: ApId,
    pub week: WeekIndex,
    pub place: PlaceId,
}

/// Weekly community per residential AP over weeks `0..n_weeks`.
///
/// A track starts at the AP's first fingerprint. Its place changes only on an
/// accepted move; an anchor drifting into a neighboring community without a
/// candidate keeps the old place. A candidate rejected by a filter ends the
/// track, since the AP no longer follows the same family. Weeks without a
/// fingerprint are carried forward for at most `max_gap` weeks.
pub fn family_locations(
    fingerprints: &BTreeMap<ApId, Vec<Fingerprint>>,
    candidates: &[MoveCandidate],
    accepted: &[MoveCandidate],
    ctx: &FilterContext,
    geography: &Geography,
    config: &DetectConfig,
    n_weeks: u32,
) -> Vec<FamilyLocation> {
    let key = |c: &MoveCandidate| (c.ap_id, c.to_week);
    let accepted: BTreeMap<_, &MoveCandidate> = accepted.iter().map(|c| (key(c), c)).collect();
    let rejected: BTreeSet<_> = candidates.iter().map(key).filter(|k| !accepted.contains_key(k)).collect();

    let mut out = Vec::new();
    for (&ap, prints) in fingerprints {
        if !ctx.is_residential(ap) || ctx.pockets.contains(&ap) {
            continue;
        }
        let by_week: BTreeMap<u32, &Fingerprint> = prints.iter().map(|f| (f.week.0, f)).collect();
        let mut place: Option<PlaceId> = None;
        let mut last_seen = 0;
        for week in 0..n_weeks {
            if rejected.contains(&(ap, WeekIndex(week))) {
                break;
            }
            if let Some(fp) = by_week.get(&week) {
                place = Some(match (&place, accepted.get(&(ap, WeekIndex(week)))) {
                    (_, Some(m)) => m.destination.clone(),
                    (Some(p), None) => p.clone(),
                    (None, None) => community(geography, fp.anchor_cell),
                });
                last_seen = week;
            } else if week - last_seen > config.max_gap {
                continue;
            }
            if let Some(p) = &place {
                out.push(FamilyLocation {
                    family_id: ap,
                    week: WeekIndex(week),
                    place: p.clone(),
                });
            }
        }
    }
    out
}
