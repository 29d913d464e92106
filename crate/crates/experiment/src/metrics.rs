//! Per-dimension errors: the mean over folds of each fold's mean error.

use crate::results::{FoldResults, ResultsTensor};
use crate::ExperimentError;

fn fold_mean(f: &FoldResults, err: impl Fn(f64, f64) -> f64) -> [f64; 8] {
    let mut sum = [0.0; 8];
    for (e, a) in f.estimated.iter().zip(&f.actual) {
        for d in 0..8 {
            sum[d] += err(e[d], a[d]);
        }
    }
    sum.map(|s| s / f.indices.len() as f64)
}

fn over_folds(r: &ResultsTensor, err: impl Fn(f64, f64) -> f64 + Copy) -> [f64; 8] {
    let mut total = [0.0; 8];
    for f in r.folds() {
        for (t, m) in total.iter_mut().zip(fold_mean(f, err)) {
            *t += m;
        }
    }
    total.map(|t| t / r.folds().len() as f64)
}

/// Mean absolute difference per dimension, in the units of the data.
pub fn mad(results: &ResultsTensor) -> [f64; 8] {
    over_folds(results, |e, a| (e - a).abs())
}

/// Relative percentage error per dimension.
pub fn rpe(results: &ResultsTensor) -> Result<[f64; 8], ExperimentError> {
    for f in results.folds() {
        if let Some((i, _)) = f.indices.iter().zip(&f.actual).find(|(_, a)| a.iter().any(|v| *v == 0.0)) {
            return Err(ExperimentError::Metric(format!("instance {i} has an actual value of zero")));
        }
    }
    Ok(over_folds(results, |e, a| ((e - a) / a).abs()).map(|v| v * 100.0))
}

/// Mean over dimensions.
pub fn average(per_dimension: &[f64; 8]) -> f64 {
    per_dimension.iter().sum::<f64>() / 8.0
}
