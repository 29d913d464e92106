use std::fmt::Write as _;

use anthropometer_core::dataset::Dimension;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::metrics::{average, mad, rpe};
use crate::results::ResultsTensor;
use crate::ExperimentError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionMetrics {
    pub dimension: Dimension,
    pub mad_mm: f64,
    pub rpe_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rows: Vec<DimensionMetrics>,
    pub amad_mm: f64,
    pub arpe_percent: f64,
}

impl Metrics {
    pub fn from_results(results: &ResultsTensor) -> Result<Self, ExperimentError> {
        let m = mad(results).map(|v| v * 1000.0);
        let p = rpe(results)?;
        Ok(Metrics {
            rows: Dimension::ALL
                .iter()
                .map(|&d| DimensionMetrics {
                    dimension: d,
                    mad_mm: m[d.index()],
                    rpe_percent: p[d.index()],
                })
                .collect(),
            amad_mm: average(&m),
            arpe_percent: average(&p),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub fold: usize,
    pub train_count: usize,
    pub eval_count: usize,
    pub amad_mm: f64,
    pub baseline_amad_mm: f64,
    /// Mean training loss per epoch.
    pub losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub metrics: Metrics,
    /// Predicting each dimension's training-set mean.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<Metrics>,
    #[serde(default)]
    pub folds: Vec<FoldSummary>,
    /// Config, seed and dataset hash of the run.
    pub provenance: Value,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(|e| ExperimentError::Shape(format!("report: {e}")))
    }

    /// Aligned text table: one row per dimension, then AMAD and ARPE.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        table(&mut out, &self.metrics);
        if let Some(b) = &self.baseline {
            out.push_str("\nBaseline: training-set mean\n");
            table(&mut out, b);
        }
        if !self.folds.is_empty() {
            out.push_str("\nFold  Train  Eval  AMAD (mm)  Baseline (mm)\n");
            for f in &self.folds {
                let _ = writeln!(
                    out,
                    "{:>4}  {:>5}  {:>4}  {:>9.2}  {:>13.2}",
                    f.fold, f.train_count, f.eval_count, f.amad_mm, f.baseline_amad_mm
                );
            }
        }
        out
    }
}

fn table(out: &mut String, m: &Metrics) {
    let _ = writeln!(out, "{:<22}  {:>8}  {:>7}", "HBD", "MAD (mm)", "RPE (%)");
    for r in &m.rows {
        let _ = writeln!(out, "{:<22}  {:>8.2}  {:>7.2}", r.dimension.label(), r.mad_mm, r.rpe_percent);
    }
    let _ = writeln!(out, "{:<22}  {:>8.2}  {:>7}", "AMAD", m.amad_mm, "");
    let _ = writeln!(out, "{:<22}  {:>8}  {:>7.2}", "ARPE", "", m.arpe_percent);
}
