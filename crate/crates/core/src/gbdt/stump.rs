//! Depth-one regression trees fitted to residuals by least squares.

use std::fmt;

use crate::features::{FeatureKind, FEATURE_KINDS, N_FEATURES};

use super::GbdtError;

/// Relative slack under which two split scores count as tied.
const TIE_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Split {
    /// `x <= threshold` goes left.
    Numeric { threshold: f64 },
    /// Category codes with their bit set go left.
    Categorical { left: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stump {
    pub feature_index: usize,
    pub split: Split,
    pub left_value: f64,
    pub right_value: f64,
}

pub fn category(v: f64) -> u32 {
    debug_assert!((0.0..32.0).contains(&v) && v.fract() == 0.0, "bad category code {v}");
    v as u32
}

impl Stump {
    pub fn goes_left(&self, x: &[f64; N_FEATURES]) -> bool {
        let v = x[self.feature_index];
        match self.split {
            Split::Numeric { threshold } => v <= threshold,
            Split::Categorical { left } => left & (1 << category(v)) != 0,
        }
    }

    pub fn predict(&self, x: &[f64; N_FEATURES]) -> f64 {
        if self.goes_left(x) {
            self.left_value
        } else {
            self.right_value
        }
    }

    fn constant(value: f64) -> Self {
        Stump {
            feature_index: 0,
            split: match FEATURE_KINDS[0] {
                FeatureKind::Numeric => Split::Numeric { threshold: f64::INFINITY },
                FeatureKind::Nominal => Split::Categorical { left: u32::MAX },
            },
            left_value: value,
            right_value: value,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Split::Numeric { threshold } => write!(f, "{threshold}"),
            Split::Categorical { left } => {
                let codes: Vec<String> = (0..32).filter(|c| left & (1 << c) != 0).map(|c| c.to_string()).collect();
                write!(f, "{}", codes.join("|"))
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    score: f64,
    feature_index: usize,
    split: Split,
}

/// Between-group sum of squares: larger means lower residual squared error.
fn score(sum_l: f64, n_l: usize, sum_r: f64, n_r: usize) -> f64 {
    sum_l * sum_l / n_l as f64 + sum_r * sum_r / n_r as f64
}

fn improves(score: f64, best: Option<&Candidate>) -> bool {
    match best {
        None => true,
        Some(b) => score > b.score + TIE_EPS * b.score.abs().max(1.0),
    }
}

fn numeric_candidates(
    f: usize,
    rows: &[[f64; N_FEATURES]],
    residuals: &[f64],
    min_leaf: usize,
    best: &mut Option<Candidate>,
) {
    let n = rows.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]).then(a.cmp(&b)));
    let total: f64 = residuals.iter().sum();
    let mut sum_l = 0.0;
    for k in 0..n - 1 {
        sum_l += residuals[order[k]];
        let (lo, hi) = (rows[order[k]][f], rows[order[k + 1]][f]);
        let n_l = k + 1;
        if lo == hi || n_l < min_leaf || n - n_l < min_leaf {
            continue;
        }
        let s = score(sum_l, n_l, total - sum_l, n - n_l);
        if improves(s, best.as_ref()) {
            *best = Some(Candidate {
                score: s,
                feature_index: f,
                split: Split::Numeric { threshold: lo + (hi - lo) / 2.0 },
            });
        }
    }
}

fn categorical_candidates(
    f: usize,
    rows: &[[f64; N_FEATURES]],
    residuals: &[f64],
    min_leaf: usize,
    best: &mut Option<Candidate>,
) {
    let mut groups: [(f64, usize); 32] = [(0.0, 0); 32];
    for (row, r) in rows.iter().zip(residuals) {
        let g = &mut groups[category(row[f]) as usize];
        g.0 += r;
        g.1 += 1;
    }
    let mut present: Vec<u32> = (0..32).filter(|&c| groups[c as usize].1 > 0).collect();
    present.sort_by(|&a, &b| {
        let (ga, gb) = (groups[a as usize], groups[b as usize]);
        (ga.0 / ga.1 as f64).total_cmp(&(gb.0 / gb.1 as f64)).then(a.cmp(&b))
    });
    let n = rows.len();
    let total: f64 = residuals.iter().sum();
    let (mut sum_l, mut n_l, mut mask) = (0.0, 0usize, 0u32);
    for &c in &present[..present.len().saturating_sub(1)] {
        sum_l += groups[c as usize].0;
        n_l += groups[c as usize].1;
        mask |= 1 << c;
        if n_l < min_leaf || n - n_l < min_leaf {
            continue;
        }
        let s = score(sum_l, n_l, total - sum_l, n - n_l);
        if improves(s, best.as_ref()) {
            *best = Some(Candidate {
                score: s,
                feature_index: f,
                split: Split::Categorical { left: mask },
            });
        }
    }
}

/// Best least-squares stump over all features. Falls back to a constant
/// stump at the residual mean when no split satisfies `min_leaf` or none
/// reduces the error.
pub fn fit_stump(
    rows: &[[f64; N_FEATURES]],
    residuals: &[f64],
    min_leaf: usize,
) -> Result<Stump, GbdtError> {
    assert_eq!(rows.len(), residuals.len());
    let min_leaf = min_leaf.max(1);
    if rows.len() < 2 * min_leaf {
        return Err(GbdtError::TooFewSamples {
            n: rows.len(),
            min_leaf,
        });
    }
    let n = rows.len();
    let total: f64 = residuals.iter().sum();
    let mut best: Option<Candidate> = None;
    for (f, kind) in FEATURE_KINDS.iter().enumerate() {
        match kind {
            FeatureKind::Numeric => numeric_candidates(f, rows, residuals, min_leaf, &mut best),
            FeatureKind::Nominal => categorical_candidates(f, rows, residuals, min_leaf, &mut best),
        }
    }
    let no_split_score = total * total / n as f64;
    let best = match best {
        Some(b) if b.score > no_split_score + TIE_EPS * no_split_score.abs().max(1.0) => b,
        _ => return Ok(Stump::constant(total / n as f64)),
    };
    let mut stump = Stump {
        feature_index: best.feature_index,
        split: best.split,
        left_value: 0.0,
        right_value: 0.0,
    };
    let (mut sl, mut nl, mut sr, mut nr) = (0.0, 0usize, 0.0, 0usize);
    for (row, r) in rows.iter().zip(residuals) {
        if stump.goes_left(row) {
            sl += r;
            nl += 1;
        } else {
            sr += r;
            nr += 1;
        }
    }
    stump.left_value = sl / nl as f64;
    stump.right_value = sr / nr as f64;
    Ok(stump)
}
