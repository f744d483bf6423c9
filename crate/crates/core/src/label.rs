//! Residential labels from terminal sessions.
//!
//! A session that starts late at night, ends the next morning and comes with
//! a late car-service call votes for "residential"; a session spanning the
//! working day votes against. Each AP takes the majority of its votes unless
//! the vote is close or thin.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geo::{day_of, time_of_day};
use crate::records::{ApId, SessionRecord};

const HOUR: i64 = 3600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApLabel {
    pub ap_id: ApId,
    pub label: Label,
    /// Sessions that voted for `label`.
    pub support: u32,
}

/// Hour bounds are local hours of day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelRules {
    pub positive_connect_from_hour: i64,
    pub positive_disconnect_before_hour: i64,
    pub car_call_from_hour: i64,
    pub negative_connect_from_hour: i64,
    pub negative_connect_before_hour: i64,
    pub negative_disconnect_from_hour: i64,
    /// Positive-vote shares in `[abstain_low, abstain_high]` leave the AP unlabeled.
    pub abstain_low: f64,
    pub abstain_high: f64,
    pub min_support: u32,
}

impl Default for LabelRules {
    fn default() -> Self {
        Self {
            positive_connect_from_hour: 21,
            positive_disconnect_before_hour: 12,
            car_call_from_hour: 21,
            negative_connect_from_hour: 9,
            negative_connect_before_hour: 18,
            negative_disconnect_from_hour: 17,
            abstain_low: 0.4,
            abstain_high: 0.6,
            min_support: 3,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelOutcome {
    /// Sorted by AP id.
    pub labels: Vec<ApLabel>,
    pub malformed_sessions: usize,
}

impl LabelRules {
    /// How a single session votes, if at all.
    pub fn vote(&self, s: &SessionRecord) -> Option<Label> {
        let connect_day = day_of(s.connect_ts);
        let connect_tod = time_of_day(s.connect_ts);
        let disconnect_day = day_of(s.disconnect_ts);
        let disconnect_tod = time_of_day(s.disconnect_ts);

        let late_call = s.car_call_ts.is_some_and(|c| {
            c >= connect_day * crate::geo::SECONDS_PER_DAY + self.car_call_from_hour * HOUR
                && c <= s.disconnect_ts
        });
        if connect_tod >= self.positive_connect_from_hour * HOUR
            && disconnect_day == connect_day + 1
            && disconnect_tod < self.positive_disconnect_before_hour * HOUR
            && late_call
        {
            return Some(Label::Positive);
        }
        if connect_tod >= self.negative_connect_from_hour * HOUR
            && connect_tod < self.negative_connect_before_hour * HOUR
            && disconnect_day == connect_day
            && disconnect_tod >= self.negative_disconnect_from_hour * HOUR
        {
            return Some(Label::Negative);
        }
        None
    }
}

/// Majority-vote labels for every AP with enough decisive sessions.
pub fn label_sessions(sessions: &[SessionRecord], rules: &LabelRules) -> LabelOutcome {
    let mut votes: BTreeMap<ApId, (u32, u32)> = BTreeMap::new();
    let mut malformed = 0;
    for s in sessions {
        if !s.is_well_formed() {
            malformed += 1;
            continue;
        }
        match rules.vote(s) {
            Some(Label::Positive) => votes.entry(s.ap_id).or_default().0 += 1,
            Some(Label::Negative) => votes.entry(s.ap_id).or_default().1 += 1,
            None => {}
        }
    }
    let labels = votes
        .into_iter()
        .filter_map(|(ap_id, (pos, neg))| {
            let share = pos as f64 / (pos + neg) as f64;
            if (rules.abstain_low..=rules.abstain_high).contains(&share) {
                return None;
            }
            let (label, support) = if pos > neg {
                (Label::Positive, pos)
            } else {
                (Label::Negative, neg)
            };
            (support >= rules.min_support).then_some(ApLabel { ap_id, label, support })
        })
        .collect();
    LabelOutcome {
        labels,
        malformed_sessions: malformed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::TerminalId;

    fn at(day: i64, h: i64, m: i64) -> i64 {
        day * 86_400 + h * HOUR + m * 60
    }

    fn session(ap: u32, connect: i64, disconnect: i64, car: Option<i64>) -> SessionRecord {
        SessionRecord {
            terminal_id: TerminalId(1),
            ap_id: ApId(ap),
            connect_ts: connect,
            disconnect_ts: disconnect,
            car_call_ts: car,
        }
    }

    #[test]
    fn late_arrival_with_car_call_votes_positive() {
        let s = session(1, at(3, 21, 30), at(4, 7, 30), Some(at(3, 21, 5)));
        assert_eq!(LabelRules::default().vote(&s), Some(Label::Positive));
        // no car call, no vote
        let s = session(1, at(3, 21, 30), at(4, 7, 30), None);
        assert_eq!(LabelRules::default().vote(&s), None);
    }

    #[test]
    fn working_day_votes_negative() {
        let s = session(1, at(2, 9, 30), at(2, 18, 0), None);
        assert_eq!(LabelRules::default().vote(&s), Some(Label::Negative));
    }

    #[test]
    fn short_midday_session_abstains() {
        let s = session(1, at(2, 12, 0), at(2, 12, 10), None);
        assert_eq!(LabelRules::default().vote(&s), None);
    }

    #[test]
    fn majority_support_and_abstention() {
        let rules = LabelRules::default();
        let pos = |ap, d| session(ap, at(d, 22, 0), at(d + 1, 8, 0), Some(at(d, 22, 1)));
        let neg = |ap, d| session(ap, at(d, 9, 30), at(d, 18, 0), None);
        let mut sessions = Vec::new();
        // AP 1: 4 positive, 1 negative -> positive, support 4
        sessions.extend((0..4).map(|d| pos(1, d)));
        sessions.push(neg(1, 5));
        // AP 2: 3 positive, 3 negative -> in the abstention band
        sessions.extend((0..3).map(|d| pos(2, d)));
        sessions.extend((3..6).map(|d| neg(2, d)));
        // AP 3: two negative votes only -> below min_support
        sessions.extend((0..2).map(|d| neg(3, d)));
        // AP 4: 5 negative
        sessions.extend((0..5).map(|d| neg(4, d)));
        // malformed
        sessions.push(session(5, 100, 50, None));
        let out = label_sessions(&sessions, &rules);
        assert_eq!(out.malformed_sessions, 1);
        assert_eq!(
            out.labels,
            vec![
                ApLabel { ap_id: ApId(1), label: Label::Positive, support: 4 },
                ApLabel { ap_id: ApId(4), label: Label::Negative, support: 5 },
            ]
        );
    }

    #[test]
    fn order_does_not_matter() {
        let rules = LabelRules::default();
        let mut sessions: Vec<SessionRecord> = (0..20)
            .map(|i| {
                if i % 3 == 0 {
                    session(i % 4, at(i as i64, 9, 30), at(i as i64, 18, 0), None)
                } else {
                    session(i % 4, at(i as i64, 22, 0), at(i as i64 + 1, 8, 0), Some(at(i as i64, 22, 1)))
                }
            })
            .collect();
        let a = label_sessions(&sessions, &rules);
        sessions.reverse();
        assert_eq!(a, label_sessions(&sessions, &rules));
    }
}
