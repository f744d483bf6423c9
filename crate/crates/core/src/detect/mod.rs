//! AP relocation detection from week-over-week fingerprint similarity.

mod fingerprint;
mod moves;

use std::collections::BTreeMap;

use crate::features::FeatureVector;
use crate::gbdt::StumpEnsemble;
use crate::geo::{week_of, Geography};
use crate::records::{ApId, ScanObservation, TradeRecord};

pub use fingerprint::{build_fingerprints, cosine_similarity, sparse_cosine, ContextKey, Fingerprint};
pub use moves::{
    detect_moves, family_locations, pocket_aps, DetectConfig, FamilyLocation, Filter, FilterContext, MoveCandidate,
};

#[derive(Debug, Clone)]
pub struct Detection {
    /// Every raw candidate, before filtering.
    pub candidates: Vec<MoveCandidate>,
    /// Candidates that survived all filters, sorted by AP then week.
    pub accepted: Vec<MoveCandidate>,
    pub locations: Vec<FamilyLocation>,
    pub context: FilterContext,
}

/// Fingerprint, detect, filter and track in one pass.
pub fn run_detection(
    scans: &[ScanObservation],
    features: &BTreeMap<ApId, FeatureVector>,
    model: &StumpEnsemble,
    trades: &[TradeRecord],
    geography: &Geography,
    config: &DetectConfig,
) -> Detection {
    let n_weeks = scans.iter().map(|s| week_of(s.timestamp).0 + 1).max().unwrap_or(0);
    let prints = build_fingerprints(scans, geography, config.min_obs);
    let candidates = detect_moves(&prints, geography, config);
    let context = FilterContext {
        residential_proba: features
            .iter()
            .map(|(ap, f)| (*ap, model.predict_proba(&f.values())))
            .collect(),
        pockets: pocket_aps(scans, geography, config.pocket_radius_m),
        trade_window_weeks: config.trade_window_weeks,
        residential_threshold: config.residential_threshold,
        ..Default::default()
    }
    .with_trades(trades);
    let accepted = context.apply(&candidates, &Filter::ALL);
    let locations = family_locations(&prints, &candidates, &accepted, &context, geography, config, n_weeks);
    Detection {
        candidates,
        accepted,
        locations,
        context,
    }
}
