use std::path::Path;

use anthropometer_core::anthropometry::{measure_all, MeasurementConfig, MeasurementRecord};
use anthropometer_core::dataset::Manifest;
use anthropometer_core::raster::{read_pgm, render_orthographic, CameraConfig};
use anthropometer_core::synth::{generate_population, PopulationRanges};
use anthropometer_neural::train::TrainData;
use rayon::prelude::*;

use crate::{data_err, sha256_hex, ExperimentError};

/// Square grayscale images with their eight ground-truth dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub ids: Vec<String>,
    /// Stratification label per instance, `gender/pose`.
    pub strata: Vec<String>,
    pub side: usize,
    pub images: Vec<Vec<u8>>,
    pub targets: Vec<[f64; 8]>,
}

impl Dataset {
    pub fn new(
        ids: Vec<String>,
        strata: Vec<String>,
        side: usize,
        images: Vec<Vec<u8>>,
        targets: Vec<[f64; 8]>,
    ) -> Result<Self, ExperimentError> {
        let n = ids.len();
        if n == 0 {
            return Err(ExperimentError::Shape("empty dataset".into()));
        }
        if strata.len() != n || images.len() != n || targets.len() != n {
            return Err(ExperimentError::Shape(format!(
                "{n} ids, {} labels, {} images, {} targets",
                strata.len(),
                images.len(),
                targets.len()
            )));
        }
        if let Some(i) = images.iter().position(|im| im.len() != side * side) {
            return Err(ExperimentError::Shape(format!("image {} is not {side}×{side}", ids[i])));
        }
        if let Some(i) = targets.iter().position(|t| t.iter().any(|v| !v.is_finite() || *v <= 0.0)) {
            return Err(ExperimentError::Shape(format!("targets of {} are not positive and finite", ids[i])));
        }
        Ok(Dataset {
            ids,
            strata,
            side,
            images,
            targets,
        })
    }

    /// Reads each record's rendered image and measured dimensions from the
    /// directory holding the manifest.
    pub fn load(manifest_path: &Path) -> Result<Self, ExperimentError> {
        let manifest = Manifest::load(manifest_path).map_err(|e| data_err(manifest_path, e))?;
        let root = manifest_path.parent().unwrap_or(Path::new("."));
        let n = manifest.records.len();
        let (mut ids, mut strata, mut images, mut targets) =
            (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        let mut side = None;
        for r in &manifest.records {
            let img_path = root.join(r.image_path());
            let img = read_pgm(&img_path).map_err(|e| data_err(&img_path, e))?;
            if img.width() != img.height() || side.is_some_and(|s| s != img.width()) {
                return Err(data_err(&img_path, format!("image is {}×{}", img.width(), img.height())));
            }
            side = Some(img.width());
            let m_path = root.join(r.measurement_path());
            let text = std::fs::read_to_string(&m_path).map_err(|e| data_err(&m_path, e))?;
            let m: MeasurementRecord = serde_json::from_str(&text).map_err(|e| data_err(&m_path, e))?;
            if m.id != r.id {
                return Err(data_err(&m_path, format!("holds record {:?}, expected {:?}", m.id, r.id)));
            }
            ids.push(r.id.clone());
            strata.push(format!("{}/{}", r.gender, r.pose));
            images.push(img.pixels().to_vec());
            targets.push(*m.hbd.values());
        }
        Dataset::new(ids, strata, side.unwrap_or(0), images, targets)
    }

    /// Generates `subjects` procedural subjects in both poses, measures and
    /// renders every mesh in memory.
    pub fn synthetic(
        subjects: usize,
        seed: u64,
        ranges: &PopulationRanges,
        measure: &MeasurementConfig,
        camera: &CameraConfig,
    ) -> Result<Self, ExperimentError> {
        let pop = generate_population(subjects, seed, ranges).map_err(|e| ExperimentError::Config(e.to_string()))?;
        let rows = pop
            .members
            .par_iter()
            .map(|m| {
                let fail = |e: String| ExperimentError::Data {
                    path: m.record.id.clone(),
                    detail: e,
                };
                let hbd = measure_all(&m.body.mesh, &m.body.joints, measure).map_err(|e| fail(e.to_string()))?;
                let img = render_orthographic(&m.body.mesh, camera).map_err(|e| fail(e.to_string()))?;
                Ok((img.pixels().to_vec(), *hbd.values()))
            })
            .collect::<Result<Vec<_>, ExperimentError>>()?;
        let (images, targets) = rows.into_iter().unzip();
        Dataset::new(
            pop.members.iter().map(|m| m.record.id.clone()).collect(),
            pop.members.iter().map(|m| format!("{}/{}", m.record.gender, m.record.pose)).collect(),
            camera.resolution,
            images,
            targets,
        )
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn train_data(&self) -> TrainData<'_> {
        TrainData {
            side: self.side,
            images: &self.images,
            targets: &self.targets,
        }
    }

    /// SHA-256 over ids, image bytes and target bits, in order.
    pub fn hash(&self) -> String {
        let mut buf = Vec::with_capacity(self.len() * (self.side * self.side + 96));
        for ((id, img), t) in self.ids.iter().zip(&self.images).zip(&self.targets) {
            buf.extend_from_slice(id.as_bytes());
            buf.push(0);
            buf.extend_from_slice(img);
            for v in t {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        sha256_hex(&buf)
    }
}
