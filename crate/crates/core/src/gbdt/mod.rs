//! Gradient boosting with least-squares stumps under logistic loss.

mod cv;
mod stump;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::features::{FeatureKind, FeatureVector, FEATURE_KINDS, N_FEATURES};
use crate::records::ApId;

pub use cv::{cross_validate, cross_validate_with, CvReport, FoldScore};
pub use stump::{fit_stump, Split, Stump};

const FORMAT_VERSION: &str = "v1";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GbdtError {
    #[error("training set is empty")]
    Empty,
    #[error("training set has only {0} labels")]
    SingleClass(&'static str),
    #[error("n_stages must be at least 1")]
    NoStages,
    #[error("invalid learning rate {0}")]
    BadRate(f64),
    #[error("{n} samples cannot fill two leaves of {min_leaf}")]
    TooFewSamples { n: usize, min_leaf: usize },
    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("fold {fold} lacks {missing} samples")]
    DegenerateFold { fold: usize, missing: &'static str },
    #[error("model file line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub fn sigmoid(f: f64) -> f64 {
    if f >= 0.0 {
        1.0 / (1.0 + (-f).exp())
    } else {
        let e = f.exp();
        e / (1.0 + e)
    }
}

/// Logistic loss of score `f` against a 0/1 label.
pub fn logistic_loss(y: bool, f: f64) -> f64 {
    // log(1 + e^f) - y*f, written to stay finite for large |f|
    let softplus = if f > 0.0 { f + (-f).exp().ln_1p() } else { f.exp().ln_1p() };
    if y {
        softplus - f
    } else {
        softplus
    }
}

/// Negative gradient of the logistic loss: `y - sigmoid(F)`.
pub fn pseudo_residuals(labels: &[bool], scores: &[f64]) -> Vec<f64> {
    labels
        .iter()
        .zip(scores)
        .map(|(&y, &f)| y as u8 as f64 - sigmoid(f))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub n_stages: usize,
    pub gamma0: f64,
    /// Stage rate is `gamma0 / (1 + decay * m)`.
    pub decay: f64,
    pub min_leaf: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_stages: 4,
            gamma0: 0.5,
            decay: 0.3,
            min_leaf: 5,
        }
    }
}

impl TrainConfig {
    pub fn rate(&self, m: usize) -> f64 {
        self.gamma0 / (1.0 + self.decay * m as f64)
    }

    // negated comparisons so that NaN fails them
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), GbdtError> {
        if self.n_stages == 0 {
            return Err(GbdtError::NoStages);
        }
        if !(self.gamma0 > 0.0 && self.gamma0 <= 1.0) {
            return Err(GbdtError::BadRate(self.gamma0));
        }
        if !(self.decay >= 0.0) {
            return Err(GbdtError::BadRate(self.decay));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub ap_id: ApId,
    pub x: [f64; N_FEATURES],
    pub y: bool,
}

impl Sample {
    pub fn new(ap_id: ApId, features: &FeatureVector, y: bool) -> Self {
        Self {
            ap_id,
            x: features.values(),
            y,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StumpEnsemble {
    pub base_score: f64,
    pub stages: Vec<(Stump, f64)>,
    /// Mean training loss before the first stage and after each stage.
    pub training_loss: Vec<f64>,
}

impl StumpEnsemble {
    pub fn raw_score(&self, x: &[f64; N_FEATURES]) -> f64 {
        self.stages
            .iter()
            .fold(self.base_score, |f, (stump, gamma)| f + gamma * stump.predict(x))
    }

    pub fn predict_proba(&self, x: &[f64; N_FEATURES]) -> f64 {
        sigmoid(self.raw_score(x))
    }

    pub fn is_residential(&self, features: &FeatureVector) -> bool {
        self.predict_proba(&features.values()) >= 0.5
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{FORMAT_VERSION},{},{}\n", self.base_score, self.stages.len());
        for (s, gamma) in &self.stages {
            let kind = match s.split {
                Split::Numeric { .. } => "num",
                Split::Categorical { .. } => "cat",
            };
            writeln!(
                out,
                "{},{kind},{},{},{},{gamma}",
                s.feature_index, s.split, s.left_value, s.right_value
            )
            .expect("writing to a String");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, GbdtError> {
        let err = |line: usize, reason: &str| GbdtError::Parse {
            line,
            reason: reason.to_string(),
        };
        let float = |line: usize, s: &str| s.parse::<f64>().map_err(|e| err(line, &format!("{s:?}: {e}")));
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        let (n, header) = lines.next().ok_or_else(|| err(1, "empty model"))?;
        let head: Vec<&str> = header.split(',').collect();
        if head.len() != 3 || head[0] != FORMAT_VERSION {
            return Err(err(n, "expected header `v1,<base_score>,<n_stages>`"));
        }
        let base_score = float(n, head[1])?;
        let m: usize = head[2].parse().map_err(|_| err(n, "bad stage count"))?;
        let mut stages = Vec::with_capacity(m);
        for (n, line) in lines {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(err(n, "expected 6 fields"));
            }
            let feature_index: usize = f[0].parse().map_err(|_| err(n, "bad feature index"))?;
            let expected = *FEATURE_KINDS.get(feature_index).ok_or_else(|| err(n, "feature index out of range"))?;
            let split = match (f[1], expected) {
                ("num", FeatureKind::Numeric) => Split::Numeric { threshold: float(n, f[2])? },
                ("cat", FeatureKind::Nominal) => {
                    let mut left = 0u32;
                    for code in f[2].split('|').filter(|c| !c.is_empty()) {
                        let c: u32 = code.parse().map_err(|_| err(n, "bad category code"))?;
                        if c >= 32 {
                            return Err(err(n, "category code above 31"));
                        }
                        left |= 1 << c;
                    }
                    Split::Categorical { left }
                }
                _ => return Err(err(n, "split kind does not match feature kind")),
            };
            let gamma = float(n, f[5])?;
            if !(gamma > 0.0 && gamma <= 1.0) {
                return Err(err(n, "stage rate outside (0, 1]"));
            }
            stages.push((
                Stump {
                    feature_index,
                    split,
                    left_value: float(n, f[3])?,
                    right_value: float(n, f[4])?,
                },
                gamma,
            ));
        }
        if stages.len() != m {
            return Err(err(0, &format!("header promises {m} stages, found {}", stages.len())));
        }
        Ok(Self {
            base_score,
            stages,
            training_loss: Vec::new(),
        })
    }
}

fn mean_loss(labels: &[bool], scores: &[f64]) -> f64 {
    labels.iter().zip(scores).map(|(&y, &f)| logistic_loss(y, f)).sum::<f64>() / labels.len() as f64
}

/// Fit `config.n_stages` stumps to the pseudo-residuals of the running model.
pub fn train(samples: &[Sample], config: &TrainConfig) -> Result<StumpEnsemble, GbdtError> {
    config.validate()?;
    if samples.is_empty() {
        return Err(GbdtError::Empty);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.ap_id.cmp(&b.ap_id).then(a.x.partial_cmp(&b.x).unwrap_or(std::cmp::Ordering::Equal)).then(a.y.cmp(&b.y)));
    let rows: Vec<[f64; N_FEATURES]> = sorted.iter().map(|s| s.x).collect();
    let labels: Vec<bool> = sorted.iter().map(|s| s.y).collect();

    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 {
        return Err(GbdtError::SingleClass("negative"));
    }
    if positives == labels.len() {
        return Err(GbdtError::SingleClass("positive"));
    }
    let p = positives as f64 / labels.len() as f64;
    let base_score = (p / (1.0 - p)).ln();

    let mut scores = vec![base_score; rows.len()];
    let mut training_loss = vec![mean_loss(&labels, &scores)];
    let mut stages = Vec::with_capacity(config.n_stages);
    for m in 0..config.n_stages {
        let residuals = pseudo_residuals(&labels, &scores);
        let stump = fit_stump(&rows, &residuals, config.min_leaf)?;
        let gamma = config.rate(m);
        for (f, row) in scores.iter_mut().zip(&rows) {
            *f += gamma * stump.predict(row);
        }
        let loss = mean_loss(&labels, &scores);
        let prev = *training_loss.last().expect("seeded with initial loss");
        assert!(
            loss <= prev + 1e-12 * prev.max(1.0),
            "training loss rose at stage {m}: {prev} -> {loss}"
        );
        training_loss.push(loss);
        stages.push((stump, gamma));
    }
    Ok(StumpEnsemble {
        base_score,
        stages,
        training_loss,
    })
}
