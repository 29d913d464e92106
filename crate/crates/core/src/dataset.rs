//! Body-dimension vectors, subject records and the dataset manifest.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The eight body dimensions, in their canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    ShoulderWidth,
    RightArmLength,
    LeftArmLength,
    Inseam,
    ChestCircumference,
    WaistCircumference,
    PelvisCircumference,
    Height,
}

impl Dimension {
    pub const ALL: [Dimension; 8] = [
        Dimension::ShoulderWidth,
        Dimension::RightArmLength,
        Dimension::LeftArmLength,
        Dimension::Inseam,
        Dimension::ChestCircumference,
        Dimension::WaistCircumference,
        Dimension::PelvisCircumference,
        Dimension::Height,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Machine name used in JSON and CSV.
    pub fn key(self) -> &'static str {
        match self {
            Dimension::ShoulderWidth => "shoulder_width",
            Dimension::RightArmLength => "right_arm_length",
            Dimension::LeftArmLength => "left_arm_length",
            Dimension::Inseam => "inseam",
            Dimension::ChestCircumference => "chest_circumference",
            Dimension::WaistCircumference => "waist_circumference",
            Dimension::PelvisCircumference => "pelvis_circumference",
            Dimension::Height => "height",
        }
    }

    /// Human-readable label for report tables.
    pub fn label(self) -> &'static str {
        match self {
            Dimension::ShoulderWidth => "Shoulder width",
            Dimension::RightArmLength => "Right arm length",
            Dimension::LeftArmLength => "Left arm length",
            Dimension::Inseam => "Inseam/crotch height",
            Dimension::ChestCircumference => "Chest circumference",
            Dimension::WaistCircumference => "Waist circumference",
            Dimension::PelvisCircumference => "Pelvis circumference",
            Dimension::Height => "Height",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, Error, PartialEq)]
#[error("{dimension} = {value} m is outside (0, 3) m")]
pub struct HbdRangeError {
    pub dimension: Dimension,
    pub value: f64,
}

/// Eight body dimensions in meters, every value in (0, 3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HbdVector([f64; 8]);

impl HbdVector {
    pub const MAX: f64 = 3.0;

    pub fn new(values: [f64; 8]) -> Result<Self, HbdRangeError> {
        for d in Dimension::ALL {
            let value = values[d.index()];
            if !(value > 0.0 && value < Self::MAX) {
                return Err(HbdRangeError { dimension: d, value });
            }
        }
        Ok(HbdVector(values))
    }

    pub fn values(&self) -> &[f64; 8] {
        &self.0
    }

    pub fn get(&self, d: Dimension) -> f64 {
        self.0[d.index()]
    }
}

/// JSON shape of an [`HbdVector`]: one named field per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NamedHbd {
    shoulder_width: f64,
    right_arm_length: f64,
    left_arm_length: f64,
    inseam: f64,
    chest_circumference: f64,
    waist_circumference: f64,
    pelvis_circumference: f64,
    height: f64,
}

impl Serialize for HbdVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        NamedHbd {
            shoulder_width: v[0],
            right_arm_length: v[1],
            left_arm_length: v[2],
            inseam: v[3],
            chest_circumference: v[4],
            waist_circumference: v[5],
            pelvis_circumference: v[6],
            height: v[7],
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HbdVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let n = NamedHbd::deserialize(d)?;
        HbdVector::new([
            n.shoulder_width,
            n.right_arm_length,
            n.left_arm_length,
            n.inseam,
            n.chest_circumference,
            n.waist_circumference,
            n.pelvis_circumference,
            n.height,
        ])
        .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
}

/// `Pose0` is the template pose; `Pose1` has the arms abducted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pose {
    Pose0,
    Pose1,
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Female => "female",
            Gender::Male => "male",
        })
    }
}

impl fmt::Display for Pose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pose::Pose0 => "pose0",
            Pose::Pose1 => "pose1",
        })
    }
}

impl FromStr for Pose {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pose0" => Ok(Pose::Pose0),
            "pose1" => Ok(Pose::Pose1),
            _ => Err(format!("unknown pose {s:?}")),
        }
    }
}

/// One mesh of the dataset. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub id: String,
    pub subject: String,
    pub gender: Gender,
    pub pose: Pose,
    pub mesh: PathBuf,
    pub joints: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<PathBuf>,
}

impl SubjectRecord {
    /// Where `measure` writes this record's dimensions.
    pub fn measurement_path(&self) -> PathBuf {
        Path::new("measurements").join(format!("{}.json", self.id))
    }

    /// Where `render` writes this record's image.
    pub fn image_path(&self) -> PathBuf {
        Path::new("images").join(format!("{}.pgm", self.id))
    }
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported manifest version {0}")]
    Version(u32),
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
    #[error("manifest has no records")]
    Empty,
}

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
    pub records: Vec<SubjectRecord>,
}

impl Manifest {
    pub fn new(records: Vec<SubjectRecord>) -> Self {
        Manifest {
            version: MANIFEST_VERSION,
            seed: None,
            provenance: None,
            records,
        }
    }

    pub fn validate(&self) -> Result<(), ManifestError> {
        if self.version != MANIFEST_VERSION {
            return Err(ManifestError::Version(self.version));
        }
        if self.records.is_empty() {
            return Err(ManifestError::Empty);
        }
        let mut seen = HashSet::new();
        for r in &self.records {
            if !seen.insert(r.id.as_str()) {
                return Err(ManifestError::DuplicateId(r.id.clone()));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ManifestError> {
        let m: Manifest = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> HbdVector {
        HbdVector::new([0.4, 0.6, 0.61, 0.8, 0.95, 0.8, 0.98, 1.75]).unwrap()
    }

    #[test]
    fn hbd_json_uses_named_fields() {
        let json = serde_json::to_string(&sample()).unwrap();
        assert!(json.starts_with("{\"shoulder_width\":0.4,\"right_arm_length\":0.6"));
        let back: HbdVector = serde_json::from_str(&json).unwrap();
        assert_eq!(back, sample());
    }

    #[test]
    fn hbd_range_is_enforced() {
        let err = HbdVector::new([0.4, 0.6, 0.61, 0.0, 0.95, 0.8, 0.98, 1.75]).unwrap_err();
        assert_eq!(err.dimension, Dimension::Inseam);
        assert!(HbdVector::new([0.4, 0.6, 0.61, 0.8, 0.95, 0.8, 0.98, 3.0]).is_err());
        assert!(HbdVector::new([f64::NAN, 0.6, 0.61, 0.8, 0.95, 0.8, 0.98, 1.7]).is_err());
        let bad = r#"{"shoulder_width":-1,"right_arm_length":0.6,"left_arm_length":0.6,"inseam":0.8,
            "chest_circumference":0.9,"waist_circumference":0.8,"pelvis_circumference":0.9,"height":1.7}"#;
        assert!(serde_json::from_str::<HbdVector>(bad).is_err());
    }

    fn record(id: &str) -> SubjectRecord {
        SubjectRecord {
            id: id.into(),
            subject: "s".into(),
            gender: Gender::Female,
            pose: Pose::Pose1,
            mesh: "meshes/a.obj".into(),
            joints: "joints/a.json".into(),
            ground_truth: None,
        }
    }

    #[test]
    fn manifest_rejects_duplicate_ids() {
        let m = Manifest::new(vec![record("a"), record("a")]);
        assert!(matches!(m.validate(), Err(ManifestError::DuplicateId(id)) if id == "a"));
    }

    #[test]
    fn manifest_rejects_unknown_pose() {
        let json = Manifest::new(vec![record("a")]).to_json().replace("pose1", "pose7");
        assert!(matches!(Manifest::from_json(&json), Err(ManifestError::Json(_))));
    }

    #[test]
    fn manifest_json_round_trip() {
        let m = Manifest::new(vec![record("a"), record("b")]);
        assert_eq!(Manifest::from_json(&m.to_json()).unwrap(), m);
    }
}
