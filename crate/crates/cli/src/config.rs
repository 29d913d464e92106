use std::path::Path;

use anthropometer_core::anthropometry::MeasurementConfig;
use anthropometer_core::raster::CameraConfig;
use anthropometer_core::synth::PopulationRanges;
use anthropometer_experiment::ExperimentConfig;
use anthropometer_neural::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::{CliError, TrainFlags};

/// Everything a command may need. Missing fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub k: usize,
    pub stratified: bool,
    pub population: PopulationRanges,
    pub measure: MeasurementConfig,
    pub camera: CameraConfig,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let e = ExperimentConfig::default();
        RunConfig {
            seed: e.seed,
            k: e.k,
            stratified: e.stratified,
            population: PopulationRanges::default(),
            measure: MeasurementConfig::default(),
            camera: CameraConfig::default(),
            train: e.train,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, f: &TrainFlags) {
        self.seed = f.seed.unwrap_or(self.seed);
        self.k = f.k.unwrap_or(self.k);
        self.stratified |= f.stratified;
        self.train.epochs = f.epochs.unwrap_or(self.train.epochs);
        self.train.batch_size = f.batch_size.unwrap_or(self.train.batch_size);
        self.train.learning_rate = f.lr.unwrap_or(self.train.learning_rate);
        self.train.hidden = f.hidden.unwrap_or(self.train.hidden);
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            k: self.k,
            seed: self.seed,
            stratified: self.stratified,
            train: self.train.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |e: &dyn std::fmt::Display| CliError::Usage(format!("invalid config: {e}"));
        self.population.validate().map_err(|e| usage(&e))?;
        self.measure.validate().map_err(|e| usage(&e))?;
        self.camera.validate().map_err(|e| usage(&e))?;
        self.experiment().validate().map_err(|e| usage(&e))
    }
}
