//! K-fold training and evaluation of the body-dimension regressor, with
//! per-dimension error metrics and a report in the usual table layout.

use thiserror::Error;

pub mod dataset;
pub mod folds;
pub mod metrics;
pub mod report;
pub mod results;
pub mod run;

pub use dataset::Dataset;
pub use folds::{kfold_split, stratified_kfold_split, Fold, FoldSplit};
pub use metrics::{mad, rpe};
pub use report::MetricsReport;
pub use results::{FoldResults, ResultsTensor};
pub use run::{run_experiment, ExperimentConfig, ExperimentOutput};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid fold split: {0}")]
    Folds(String),
    #[error("inconsistent results: {0}")]
    Shape(String),
    #[error("{path}: {detail}")]
    Data { path: String, detail: String },
    #[error("metric undefined: {0}")]
    Metric(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Neural(#[from] anthropometer_neural::NeuralError),
}

pub(crate) fn data_err(path: &std::path::Path, detail: impl ToString) -> ExperimentError {
    ExperimentError::Data {
        path: path.display().to_string(),
        detail: detail.to_string(),
    }
}

/// Lowercase hex SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
