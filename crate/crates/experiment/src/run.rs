use anthropometer_neural::train::{predict, train, EpochStats, TrainConfig};
use anthropometer_neural::NetworkParams;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::Dataset;
use crate::folds::{kfold_split, stratified_kfold_split, Fold, FoldSplit};
use crate::metrics::{average, mad};
use crate::report::{FoldSummary, Metrics, MetricsReport};
use crate::results::{FoldResults, ResultsTensor};
use crate::ExperimentError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub k: usize,
    /// Seeds the split; fold `j` initializes its network from `seed + j`.
    pub seed: u64,
    pub stratified: bool,
    /// Its `seed` field is replaced per fold.
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            k: 5,
            seed: 0,
            stratified: false,
            train: TrainConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.k < 2 {
            return Err(ExperimentError::Config(format!("k = {} but at least 2 folds are needed", self.k)));
        }
        self.train.validate()?;
        Ok(())
    }

    pub fn fold_train_config(&self, fold: usize) -> TrainConfig {
        TrainConfig {
            seed: self.seed.wrapping_add(fold as u64),
            ..self.train.clone()
        }
    }

    pub fn split(&self, data: &Dataset) -> Result<FoldSplit, ExperimentError> {
        let split = if self.stratified {
            stratified_kfold_split(&data.strata, self.k, self.seed)?
        } else {
            kfold_split(data.len(), self.k, self.seed)?
        };
        split.validate(data.len())?;
        Ok(split)
    }
}

pub struct FoldOutcome {
    pub params: NetworkParams<f32>,
    pub history: Vec<EpochStats>,
    pub results: FoldResults,
    pub baseline: FoldResults,
}

pub struct ExperimentOutput {
    pub split: FoldSplit,
    pub results: ResultsTensor,
    pub baseline: ResultsTensor,
    pub report: MetricsReport,
    pub models: Vec<NetworkParams<f32>>,
    pub histories: Vec<Vec<EpochStats>>,
}

fn actual(data: &Dataset, eval: &[usize]) -> Vec<[f64; 8]> {
    eval.iter().map(|&i| data.targets[i]).collect()
}

/// Every eval instance gets the per-dimension mean of the training targets.
pub fn baseline_fold(data: &Dataset, fold: &Fold) -> FoldResults {
    let mut mean = [0.0; 8];
    for &i in &fold.train {
        for (m, t) in mean.iter_mut().zip(data.targets[i]) {
            *m += t;
        }
    }
    let mean = mean.map(|m| m / fold.train.len() as f64);
    FoldResults {
        indices: fold.eval.clone(),
        estimated: vec![mean; fold.eval.len()],
        actual: actual(data, &fold.eval),
    }
}

pub fn evaluate_fold(
    params: &NetworkParams<f32>,
    data: &Dataset,
    fold: &Fold,
    cfg: &TrainConfig,
) -> Result<FoldResults, ExperimentError> {
    Ok(FoldResults {
        indices: fold.eval.clone(),
        estimated: predict(params, data.train_data(), &fold.eval, cfg.batch_size, cfg.pixel_scale)?,
        actual: actual(data, &fold.eval),
    })
}

pub fn run_fold(
    data: &Dataset,
    cfg: &ExperimentConfig,
    split: &FoldSplit,
    j: usize,
    on_epoch: impl FnMut(&EpochStats),
) -> Result<FoldOutcome, ExperimentError> {
    let fold = &split.folds[j];
    let tc = cfg.fold_train_config(j);
    let (params, history) = train::<f32>(&tc, data.train_data(), &fold.train, on_epoch)?;
    let results = evaluate_fold(&params, data, fold, &tc)?;
    Ok(FoldOutcome {
        params,
        history,
        results,
        baseline: baseline_fold(data, fold),
    })
}

pub fn provenance(data: &Dataset, cfg: &ExperimentConfig) -> serde_json::Value {
    json!({
        "config": cfg,
        "seed": cfg.seed,
        "dataset_hash": data.hash(),
        "instances": data.len(),
    })
}

/// Report over persisted tensors. `losses[j]` holds fold `j`'s epoch losses
/// and may be empty when only evaluation was run.
pub fn build_report(
    results: &ResultsTensor,
    baseline: &ResultsTensor,
    split: &FoldSplit,
    losses: &[Vec<f64>],
    provenance: serde_json::Value,
) -> Result<MetricsReport, ExperimentError> {
    let k = split.folds.len();
    if results.folds().len() != k || baseline.folds().len() != k || losses.len() != k {
        return Err(ExperimentError::Shape(format!(
            "{k} folds in the split, {} result folds, {} baseline folds, {} loss histories",
            results.folds().len(),
            baseline.folds().len(),
            losses.len()
        )));
    }
    let one = |f: &FoldResults| ResultsTensor::new(vec![f.clone()]).map(|r| average(&mad(&r)) * 1000.0);
    let mut folds = Vec::with_capacity(k);
    for (j, fold) in split.folds.iter().enumerate() {
        folds.push(FoldSummary {
            fold: j,
            train_count: fold.train.len(),
            eval_count: fold.eval.len(),
            amad_mm: one(&results.folds()[j])?,
            baseline_amad_mm: one(&baseline.folds()[j])?,
            losses: losses[j].clone(),
        });
    }
    Ok(MetricsReport {
        metrics: Metrics::from_results(results)?,
        baseline: Some(Metrics::from_results(baseline)?),
        folds,
        provenance,
    })
}

/// Builds the report from per-fold outcomes, in fold order.
pub fn assemble(
    data: &Dataset,
    cfg: &ExperimentConfig,
    split: FoldSplit,
    outcomes: Vec<FoldOutcome>,
) -> Result<ExperimentOutput, ExperimentError> {
    let (mut models, mut histories, mut res, mut base) = (vec![], vec![], vec![], vec![]);
    for o in outcomes {
        models.push(o.params);
        histories.push(o.history);
        res.push(o.results);
        base.push(o.baseline);
    }
    let results = ResultsTensor::new(res)?;
    let baseline = ResultsTensor::new(base)?;
    let losses: Vec<Vec<f64>> = histories.iter().map(|h: &Vec<EpochStats>| h.iter().map(|e| e.mean_loss).collect()).collect();
    let report = build_report(&results, &baseline, &split, &losses, provenance(data, cfg))?;
    Ok(ExperimentOutput {
        split,
        results,
        baseline,
        report,
        models,
        histories,
    })
}

/// Trains and evaluates one network per fold. Folds run on the current
/// rayon pool; `on_epoch` receives the fold index with each epoch.
pub fn run_experiment(
    data: &Dataset,
    cfg: &ExperimentConfig,
    on_epoch: impl Fn(usize, &EpochStats) + Sync,
) -> Result<ExperimentOutput, ExperimentError> {
    cfg.validate()?;
    let split = cfg.split(data)?;
    let outcomes = (0..cfg.k)
        .into_par_iter()
        .map(|j| run_fold(data, cfg, &split, j, |s| on_epoch(j, s)))
        .collect::<Result<Vec<_>, _>>()?;
    assemble(data, cfg, split, outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_seeds_are_offset() {
        let cfg = ExperimentConfig {
            seed: 10,
            ..Default::default()
        };
        assert_eq!(cfg.fold_train_config(0).seed, 10);
        assert_eq!(cfg.fold_train_config(3).seed, 13);
    }

    #[test]
    fn baseline_predicts_training_mean() {
        let data = Dataset::new(
            (0..4).map(|i| i.to_string()).collect(),
            vec!["x".into(); 4],
            1,
            vec![vec![0]; 4],
            vec![[1.0; 8], [2.0; 8], [3.0; 8], [10.0; 8]],
        )
        .unwrap();
        let fold = Fold {
            train: vec![0, 1, 2],
            eval: vec![3],
        };
        let b = baseline_fold(&data, &fold);
        assert_eq!(b.estimated, vec![[2.0; 8]]);
        assert_eq!(b.actual, vec![[10.0; 8]]);
    }

    #[test]
    fn config_rejects_single_fold() {
        let cfg = ExperimentConfig { k: 1, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
