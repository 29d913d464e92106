//! Estimated and actual dimensions for every eval instance of every fold.
//!
//! Binary layout, integers little-endian:
//!
//! | offset | size | content                         |
//! |--------|------|---------------------------------|
//! | 0      | 8    | magic `NANTRSLT`                |
//! | 8      | 4    | u32 format version (1)          |
//! | 12     | 8    | u64 header length `H`           |
//! | 20     | H    | UTF-8 JSON header               |
//! | 20 + H | ...  | f64 LE values                   |
//!
//! Values run fold, then instance, then {estimated, actual}, then the eight
//! dimensions in canonical order. With equal fold sizes this is a row-major
//! `k × a × 2 × 8` array.

use std::path::Path;

use anthropometer_core::dataset::Dimension;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{data_err, ExperimentError};

pub const MAGIC: &[u8; 8] = b"NANTRSLT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResults {
    /// Dataset indices of the eval instances, in row order.
    pub indices: Vec<usize>,
    pub estimated: Vec<[f64; 8]>,
    pub actual: Vec<[f64; 8]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsTensor {
    folds: Vec<FoldResults>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    dtype: String,
    shape: Vec<usize>,
    fold_sizes: Vec<usize>,
    axis2: Vec<String>,
    dimensions: Vec<String>,
    indices: Vec<Vec<usize>>,
    metadata: Value,
}

impl ResultsTensor {
    pub fn new(folds: Vec<FoldResults>) -> Result<Self, ExperimentError> {
        if folds.is_empty() {
            return Err(ExperimentError::Shape("no folds".into()));
        }
        for (j, f) in folds.iter().enumerate() {
            if f.indices.is_empty() {
                return Err(ExperimentError::Shape(format!("fold {j} is empty")));
            }
            if f.estimated.len() != f.indices.len() || f.actual.len() != f.indices.len() {
                return Err(ExperimentError::Shape(format!(
                    "fold {j}: {} indices, {} estimates, {} actuals",
                    f.indices.len(),
                    f.estimated.len(),
                    f.actual.len()
                )));
            }
            if f.estimated.iter().chain(&f.actual).flatten().any(|v| !v.is_finite()) {
                return Err(ExperimentError::Shape(format!("fold {j} holds a non-finite value")));
            }
        }
        Ok(ResultsTensor { folds })
    }

    pub fn folds(&self) -> &[FoldResults] {
        &self.folds
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        self.folds.iter().map(|f| f.indices.len()).collect()
    }

    /// `[k, a, 2, 8]` when every fold has `a` instances.
    pub fn shape(&self) -> Option<[usize; 4]> {
        let a = self.folds[0].indices.len();
        self.folds.iter().all(|f| f.indices.len() == a).then_some([self.folds.len(), a, 2, 8])
    }

    pub fn to_bytes(&self, metadata: Value) -> Vec<u8> {
        let header = Header {
            dtype: "f64".into(),
            shape: self.shape().map(|s| s.to_vec()).unwrap_or_default(),
            fold_sizes: self.fold_sizes(),
            axis2: vec!["estimated".into(), "actual".into()],
            dimensions: Dimension::ALL.iter().map(|d| d.key().to_string()).collect(),
            indices: self.folds.iter().map(|f| f.indices.clone()).collect(),
            metadata,
        };
        let header = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for f in &self.folds {
            for (e, a) in f.estimated.iter().zip(&f.actual) {
                for v in e.iter().chain(a) {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, Value), ExperimentError> {
        let bad = |m: String| ExperimentError::Shape(m);
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("not a results file (bad magic)".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(bad(format!("unsupported results version {version}")));
        }
        let hlen = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
        let end = 20usize.checked_add(hlen).filter(|&e| e <= bytes.len()).ok_or_else(|| bad("truncated header".into()))?;
        let header: Header = serde_json::from_slice(&bytes[20..end]).map_err(|e| bad(format!("header: {e}")))?;
        if header.dtype != "f64" || header.indices.len() != header.fold_sizes.len() {
            return Err(bad("header does not describe an f64 results tensor".into()));
        }
        let total: usize = header.fold_sizes.iter().sum();
        let payload = &bytes[end..];
        if payload.len() != total * 16 * 8 {
            return Err(bad(format!("payload holds {} bytes, expected {}", payload.len(), total * 128)));
        }
        let mut values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let mut row = || {
            let mut r = [0.0; 8];
            r.iter_mut().for_each(|v| *v = values.next().expect("length checked"));
            r
        };
        let mut folds = Vec::with_capacity(header.fold_sizes.len());
        for (size, indices) in header.fold_sizes.iter().zip(header.indices) {
            if indices.len() != *size {
                return Err(bad("index list length differs from fold size".into()));
            }
            let (mut estimated, mut actual) = (Vec::with_capacity(*size), Vec::with_capacity(*size));
            for _ in 0..*size {
                estimated.push(row());
                actual.push(row());
            }
            folds.push(FoldResults {
                indices,
                estimated,
                actual,
            });
        }
        Ok((ResultsTensor::new(folds)?, header.metadata))
    }

    pub fn save(&self, path: &Path, metadata: Value) -> Result<(), ExperimentError> {
        std::fs::write(path, self.to_bytes(metadata)).map_err(|e| data_err(path, e))
    }

    pub fn load(path: &Path) -> Result<(Self, Value), ExperimentError> {
        let bytes = std::fs::read(path).map_err(|e| data_err(path, e))?;
        Self::from_bytes(&bytes)
    }
}
