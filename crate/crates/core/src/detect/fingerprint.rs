//! Weekly radio-context fingerprints and their cosine similarity.

use std::collections::{BTreeMap, HashMap};

use crate::geo::{week_of, Geography, GridCell, WeekIndex};
use crate::records::{ApId, ScanObservation, ScannerId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ContextKey {
    Cell(GridCell),
    Ap(ApId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    pub ap_id: ApId,
    pub week: WeekIndex,
    /// Sorted by key, all weights positive.
    pub weights: Vec<(ContextKey, f64)>,
    pub anchor_cell: GridCell,
}

/// Cosine of two sparse non-negative vectors given as key-sorted pairs.
/// Zero when either vector is all zeros.
pub fn sparse_cosine<K: Ord>(a: &[(K, f64)], b: &[(K, f64)]) -> f64 {
    let norm = |v: &[(K, f64)]| v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let (mut i, mut j, mut dot) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    (dot / (na * nb)).clamp(0.0, 1.0)
}

pub fn cosine_similarity(a: &Fingerprint, b: &Fingerprint) -> f64 {
    sparse_cosine(&a.weights, &b.weights)
}

#[derive(Default)]
struct Tally {
    observations: usize,
    cells: BTreeMap<GridCell, f64>,
    neighbors: BTreeMap<ApId, f64>,
}

/// Fingerprints for every (AP, week) with at least `min_obs` observations,
/// keyed by AP and sorted by week. Weight of a cell is the number of the
/// AP's observations in it; weight of a neighbor AP is the number of scan
/// batches in which both were seen.
pub fn build_fingerprints(
    scans: &[ScanObservation],
    geography: &Geography,
    min_obs: usize,
) -> BTreeMap<ApId, Vec<Fingerprint>> {
    let mut batches: HashMap<(ScannerId, i64), Vec<(ApId, GridCell)>> = HashMap::new();
    for s in scans {
        let Ok(cell) = geography.cell_of(&s.location()) else {
            continue;
        };
        batches.entry(s.batch()).or_default().push((s.ap_id, cell));
    }

    let mut tallies: BTreeMap<(ApId, WeekIndex), Tally> = BTreeMap::new();
    for ((_, ts), members) in &batches {
        let week = week_of(*ts);
        let mut aps: Vec<ApId> = members.iter().map(|(a, _)| *a).collect();
        aps.sort();
        aps.dedup();
        for (ap, cell) in members {
            let t = tallies.entry((*ap, week)).or_default();
            t.observations += 1;
            *t.cells.entry(*cell).or_default() += 1.0;
        }
        for &ap in &aps {
            let t = tallies.get_mut(&(ap, week)).expect("tallied above");
            for &other in &aps {
                if other != ap {
                    *t.neighbors.entry(other).or_default() += 1.0;
                }
            }
        }
    }

    let mut out: BTreeMap<ApId, Vec<Fingerprint>> = BTreeMap::new();
    for ((ap, week), t) in tallies {
        if t.observations < min_obs.max(1) {
            continue;
        }
        // BTreeMap iteration is ascending, so strict `>` keeps the lowest cell on ties
        let mut anchor = None;
        for (cell, &count) in &t.cells {
            if anchor.is_none_or(|(_, best)| count > best) {
                anchor = Some((*cell, count));
            }
        }
        let weights = t
            .cells
            .into_iter()
            .map(|(c, w)| (ContextKey::Cell(c), w))
            .chain(t.neighbors.into_iter().map(|(a, w)| (ContextKey::Ap(a), w)))
            .collect();
        out.entry(ap).or_default().push(Fingerprint {
            ap_id: ap,
            week,
            weights,
            anchor_cell: anchor.expect("observations imply a cell").0,
        });
    }
    out
}
