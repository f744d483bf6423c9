//! Stratified k-fold cross-validation.

use crate::features::N_FEATURES;

use super::{train, GbdtError, Sample, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldScore {
    pub precision: f64,
    pub recall: f64,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub folds: Vec<FoldScore>,
    pub mean_precision: f64,
    pub mean_recall: f64,
}

/// Fold index per sample: after sorting by AP id, each class is dealt out
/// round-robin so every fold sees the same class mix.
fn assign_folds(samples: &[Sample], k: usize) -> Vec<Vec<Sample>> {
    let mut sorted = samples.to_vec();
    sorted.sort_by_key(|s| (s.ap_id, s.y));
    let mut folds = vec![Vec::new(); k];
    let (mut pos, mut neg) = (0, 0);
    for s in sorted {
        let counter = if s.y { &mut pos } else { &mut neg };
        folds[*counter % k].push(s);
        *counter += 1;
    }
    folds
}

/// Cross-validate an arbitrary fitting procedure. `fit` returns a decision
/// function that says whether a feature row is predicted positive.
pub fn cross_validate_with<F, P>(samples: &[Sample], k: usize, fit: F) -> Result<CvReport, GbdtError>
where
    F: Fn(&[Sample]) -> Result<P, GbdtError>,
    P: Fn(&[f64; N_FEATURES]) -> bool,
{
    if k < 2 {
        return Err(GbdtError::TooFewFolds(k));
    }
    let folds = assign_folds(samples, k);
    for (i, fold) in folds.iter().enumerate() {
        if !fold.iter().any(|s| s.y) {
            return Err(GbdtError::DegenerateFold { fold: i, missing: "positive" });
        }
        if fold.iter().all(|s| s.y) {
            return Err(GbdtError::DegenerateFold { fold: i, missing: "negative" });
        }
    }
    let mut scores = Vec::with_capacity(k);
    for (i, test) in folds.iter().enumerate() {
        let training: Vec<Sample> = folds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        let predict = fit(&training)?;
        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        for s in test {
            match (predict(&s.x), s.y) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        let ratio = |a: usize, b: usize| if a + b == 0 { 0.0 } else { a as f64 / (a + b) as f64 };
        scores.push(FoldScore {
            precision: ratio(tp, fp),
            recall: ratio(tp, fn_),
            n_test: test.len(),
        });
    }
    let mean = |f: fn(&FoldScore) -> f64| scores.iter().map(f).sum::<f64>() / k as f64;
    Ok(CvReport {
        mean_precision: mean(|s| s.precision),
        mean_recall: mean(|s| s.recall),
        folds: scores,
    })
}

pub fn cross_validate(samples: &[Sample], k: usize, config: &TrainConfig) -> Result<CvReport, GbdtError> {
    cross_validate_with(samples, k, |training| {
        let model = train(training, config)?;
        Ok(move |x: &[f64; N_FEATURES]| model.predict_proba(x) >= 0.5)
    })
}
