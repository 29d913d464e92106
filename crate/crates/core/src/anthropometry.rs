//! The eight body dimensions, measured on a mesh with skeleton joints.
//!
//! Lengths come from plane slices: surface landmarks are found by casting
//! rays from joints, a plane through three points cuts the mesh, and the
//! closed slice curve holding the landmarks is split there. Girths are
//! convex hull perimeters of horizontal slices.

use std::fmt::Write as _;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dimension, Gender, HbdRangeError, HbdVector, Pose};
use crate::geometry::{
    convex_hull_perimeter, locate_on_curve, plane_from_points, ray_mesh_intersections, slice_mesh,
    split_closed_curve, CurvePosition, GeometryError, Plane, Polyline,
};
use crate::mesh::{self, compute_aabb, Aabb, JointError, JointSet, MeshError, TriMesh};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementConfig {
    /// Landmark search radius on slice curves, meters.
    pub tol: f64,
    /// Height of the shoulder plane's third point, as a fraction of body height.
    pub shoulder_height_fraction: f64,
    pub chest_joint: String,
    pub waist_joint: String,
    pub pelvis_joint: String,
    /// Without a waist joint, slice halfway between pelvis and chest.
    pub waist_fallback: bool,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        MeasurementConfig {
            tol: 0.001,
            shoulder_height_fraction: 0.65,
            chest_joint: mesh::CHEST.into(),
            waist_joint: mesh::WAIST.into(),
            pelvis_joint: mesh::PELVIS.into(),
            waist_fallback: true,
        }
    }
}

impl MeasurementConfig {
    pub fn validate(&self) -> Result<(), MeasureError> {
        if !(self.tol > 0.0 && self.tol < 0.01) {
            return Err(MeasureError::Config(format!("tol {} outside (0, 0.01)", self.tol)));
        }
        if !(self.shoulder_height_fraction > 0.0 && self.shoulder_height_fraction < 1.0) {
            return Err(MeasureError::Config(format!(
                "shoulder height fraction {} outside (0, 1)",
                self.shoulder_height_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Right,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Chest,
    Waist,
    Pelvis,
}

/// Per-curve distances to the two landmarks, for diagnosing a failed search.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveMiss {
    pub curve: usize,
    pub closed: bool,
    pub distance_a: f64,
    pub distance_b: f64,
}

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("invalid measurement config: {0}")]
    Config(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Joints(#[from] JointError),
    #[error("missing joint {0:?}")]
    MissingJoint(String),
    #[error("ray from joint {joint} along {direction:?} hits no surface")]
    NoHit { joint: String, direction: [f64; 3] },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{what}: no slice curve holds both landmarks within {tol} m; nearest {nearest:?}")]
    LandmarksNotOnCurve {
        what: &'static str,
        tol: f64,
        nearest: Vec<CurveMiss>,
    },
    #[error("{what}: the slice curve holding the landmarks is open (mesh not watertight)")]
    OpenCurve { what: &'static str },
    #[error("no closed slice curve at y = {y} encloses the body axis for {level:?}")]
    NoEnclosingCurve { level: Level, y: f64 },
    #[error("{dimension}: {source}")]
    Dimension {
        dimension: Dimension,
        #[source]
        source: Box<MeasureError>,
    },
    #[error(transparent)]
    Range(#[from] HbdRangeError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceLandmark {
    pub name: &'static str,
    pub point: Point3<f64>,
    pub joint: &'static str,
    pub direction: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    pub u_rs: SurfaceLandmark,
    pub u_ls: SurfaceLandmark,
    pub u_re: SurfaceLandmark,
    pub u_le: SurfaceLandmark,
    pub u_rw: SurfaceLandmark,
    pub u_lw: SurfaceLandmark,
    pub u_ch: SurfaceLandmark,
}

fn joint(joints: &JointSet, name: &str) -> Result<Point3<f64>, MeasureError> {
    joints.get(name).ok_or_else(|| MeasureError::MissingJoint(name.to_string()))
}

/// Casts a ray from a joint; `last` picks the farthest hit instead of the nearest.
fn landmark(
    mesh: &TriMesh,
    joints: &JointSet,
    name: &'static str,
    joint_name: &'static str,
    direction: Vector3<f64>,
    last: bool,
) -> Result<SurfaceLandmark, MeasureError> {
    let origin = joint(joints, joint_name)?;
    let hits = ray_mesh_intersections(mesh, &origin, &direction);
    let hit = if last { hits.last() } else { hits.first() };
    let hit = hit.ok_or_else(|| MeasureError::NoHit {
        joint: joint_name.to_string(),
        direction: [direction.x, direction.y, direction.z],
    })?;
    Ok(SurfaceLandmark {
        name,
        point: hit.point,
        joint: joint_name,
        direction,
    })
}

fn shoulder_landmarks(mesh: &TriMesh, joints: &JointSet) -> Result<(SurfaceLandmark, SurfaceLandmark), MeasureError> {
    Ok((
        landmark(mesh, joints, "u_rs", mesh::RIGHT_SHOULDER, Vector3::y(), false)?,
        landmark(mesh, joints, "u_ls", mesh::LEFT_SHOULDER, Vector3::y(), false)?,
    ))
}

fn crotch_landmark(mesh: &TriMesh, joints: &JointSet) -> Result<SurfaceLandmark, MeasureError> {
    landmark(mesh, joints, "u_ch", mesh::PELVIS, -Vector3::y(), true)
}

fn arm_landmarks(
    mesh: &TriMesh,
    joints: &JointSet,
    side: Side,
) -> Result<[SurfaceLandmark; 3], MeasureError> {
    let (shoulder, elbow, wrist, out, names) = match side {
        Side::Right => (
            mesh::RIGHT_SHOULDER,
            mesh::RIGHT_ELBOW,
            mesh::RIGHT_WRIST,
            -Vector3::x(),
            ["u_rs", "u_re", "u_rw"],
        ),
        Side::Left => (
            mesh::LEFT_SHOULDER,
            mesh::LEFT_ELBOW,
            mesh::LEFT_WRIST,
            Vector3::x(),
            ["u_ls", "u_le", "u_lw"],
        ),
    };
    Ok([
        landmark(mesh, joints, names[0], shoulder, Vector3::y(), false)?,
        landmark(mesh, joints, names[1], elbow, out, false)?,
        landmark(mesh, joints, names[2], wrist, out, false)?,
    ])
}

/// Shoulder and crotch rays go along ±y; elbow and wrist rays go outward
/// along x, toward −x on the right side. The crotch point is the last hit
/// below the pelvis; every other landmark is the first hit.
pub fn compute_landmarks(mesh: &TriMesh, joints: &JointSet) -> Result<LandmarkSet, MeasureError> {
    joints.check_inside(&compute_aabb(mesh)?)?;
    let (u_rs, u_ls) = shoulder_landmarks(mesh, joints)?;
    let [_, u_re, u_rw] = arm_landmarks(mesh, joints, Side::Right)?;
    let [_, u_le, u_lw] = arm_landmarks(mesh, joints, Side::Left)?;
    Ok(LandmarkSet {
        u_rs,
        u_ls,
        u_re,
        u_le,
        u_rw,
        u_lw,
        u_ch: crotch_landmark(mesh, joints)?,
    })
}

/// The slice curve and split positions for a pair of landmarks.
struct Located {
    curve: Polyline,
    a: CurvePosition,
    b: CurvePosition,
}

/// Finds the slice curve holding both points within `tol`. Closed curves
/// win; among several, the smallest summed distance wins.
fn locate_pair(
    curves: Vec<Polyline>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    tol: f64,
    what: &'static str,
) -> Result<Located, MeasureError> {
    let mut best: Option<(f64, usize, CurvePosition, CurvePosition)> = None;
    let mut open_match = false;
    let mut nearest = Vec::new();
    for (i, c) in curves.iter().enumerate() {
        match (locate_on_curve(c, a, tol), locate_on_curve(c, b, tol)) {
            (Some(pa), Some(pb)) if c.is_closed() => {
                let score = pa.distance + pb.distance;
                if best.as_ref().is_none_or(|(s, ..)| score < *s) {
                    best = Some((score, i, pa, pb));
                }
            }
            (Some(_), Some(_)) => open_match = true,
            _ => {
                let da = locate_on_curve(c, a, f64::INFINITY).map_or(f64::INFINITY, |p| p.distance);
                let db = locate_on_curve(c, b, f64::INFINITY).map_or(f64::INFINITY, |p| p.distance);
                nearest.push(CurveMiss {
                    curve: i,
                    closed: c.is_closed(),
                    distance_a: da,
                    distance_b: db,
                });
            }
        }
    }
    match best {
        Some((_, i, a, b)) => Ok(Located {
            curve: curves.into_iter().nth(i).expect("index from enumerate"),
            a,
            b,
        }),
        None if open_match => Err(MeasureError::OpenCurve { what }),
        None => Err(MeasureError::LandmarksNotOnCurve { what, tol, nearest }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShoulderMeasurement {
    pub width: f64,
    pub plane: Plane,
    pub curve: Polyline,
    pub shorter: Polyline,
    pub longer: Polyline,
}

/// Third point of the shoulder plane: bounding-box center x, the configured
/// fraction of the height above the floor, and the frontmost z of the mesh.
pub fn shoulder_plane_anchor(mesh: &TriMesh, aabb: &Aabb, cfg: &MeasurementConfig) -> Point3<f64> {
    Point3::new(
        aabb.center().x,
        aabb.min.y + cfg.shoulder_height_fraction * aabb.height(),
        mesh.vertices().iter().map(|v| v.z).fold(f64::NEG_INFINITY, f64::max),
    )
}

pub fn shoulder_width_detail(
    mesh: &TriMesh,
    joints: &JointSet,
    cfg: &MeasurementConfig,
) -> Result<ShoulderMeasurement, MeasureError> {
    cfg.validate()?;
    let aabb = compute_aabb(mesh)?;
    let (u_rs, u_ls) = shoulder_landmarks(mesh, joints)?;
    let p_c = shoulder_plane_anchor(mesh, &aabb, cfg);
    let plane = plane_from_points(&u_rs.point, &u_ls.point, &p_c)?;
    let found = locate_pair(slice_mesh(mesh, &plane), &u_rs.point, &u_ls.point, cfg.tol, "shoulder width")?;
    let (s1, s2) = split_closed_curve(&found.curve, &found.a, &found.b)?;
    let (shorter, longer) = if s1.length() <= s2.length() { (s1, s2) } else { (s2, s1) };
    Ok(ShoulderMeasurement {
        width: shorter.length(),
        plane,
        curve: found.curve,
        shorter,
        longer,
    })
}

pub fn shoulder_width(mesh: &TriMesh, joints: &JointSet, cfg: &MeasurementConfig) -> Result<f64, MeasureError> {
    Ok(shoulder_width_detail(mesh, joints, cfg)?.width)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmMeasurement {
    pub length: f64,
    pub plane: Plane,
    pub chosen: Polyline,
    pub rejected: Polyline,
    /// Extreme x over each subcurve's interior points.
    pub chosen_extreme_x: f64,
    pub rejected_extreme_x: f64,
}

/// Extreme x of a subcurve away from the shared split points, which both
/// subcurves contain. A bare segment falls back to its midpoint.
fn interior_extreme_x(curve: &Polyline, side: Side) -> f64 {
    let pts = curve.points();
    let inner = &pts[1..pts.len() - 1];
    let xs: Vec<f64> = if inner.is_empty() {
        vec![0.5 * (pts[0].x + pts[1].x)]
    } else {
        inner.iter().map(|p| p.x).collect()
    };
    match side {
        Side::Right => xs.into_iter().fold(f64::INFINITY, f64::min),
        Side::Left => xs.into_iter().fold(f64::NEG_INFINITY, f64::max),
    }
}

pub fn arm_length_detail(
    mesh: &TriMesh,
    joints: &JointSet,
    cfg: &MeasurementConfig,
    side: Side,
) -> Result<ArmMeasurement, MeasureError> {
    cfg.validate()?;
    let [s, e, w] = arm_landmarks(mesh, joints, side)?;
    let plane = plane_from_points(&s.point, &e.point, &w.point)?;
    let what = match side {
        Side::Right => "right arm length",
        Side::Left => "left arm length",
    };
    let found = locate_pair(slice_mesh(mesh, &plane), &s.point, &w.point, cfg.tol, what)?;
    let (s1, s2) = split_closed_curve(&found.curve, &found.a, &found.b)?;
    let (x1, x2) = (interior_extreme_x(&s1, side), interior_extreme_x(&s2, side));
    let first_wins = match side {
        Side::Right => x1 <= x2,
        Side::Left => x1 >= x2,
    };
    let (chosen, rejected, cx, rx) = if first_wins { (s1, s2, x1, x2) } else { (s2, s1, x2, x1) };
    Ok(ArmMeasurement {
        length: chosen.length(),
        plane,
        chosen,
        rejected,
        chosen_extreme_x: cx,
        rejected_extreme_x: rx,
    })
}

pub fn arm_length(mesh: &TriMesh, joints: &JointSet, cfg: &MeasurementConfig, side: Side) -> Result<f64, MeasureError> {
    Ok(arm_length_detail(mesh, joints, cfg, side)?.length)
}

/// Height of the crotch landmark above the bounding box floor.
pub fn inseam(mesh: &TriMesh, joints: &JointSet) -> Result<f64, MeasureError> {
    let aabb = compute_aabb(mesh)?;
    Ok(crotch_landmark(mesh, joints)?.point.y - aabb.min.y)
}

pub fn height(mesh: &TriMesh) -> Result<f64, MeasureError> {
    Ok(compute_aabb(mesh)?.height())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GirthMeasurement {
    pub perimeter: f64,
    pub plane: Plane,
    pub curve: Polyline,
}

/// Horizontal slice height and axis point for a girth level.
pub fn level_center(joints: &JointSet, cfg: &MeasurementConfig, level: Level) -> Result<Point3<f64>, MeasureError> {
    let name = match level {
        Level::Chest => &cfg.chest_joint,
        Level::Waist => &cfg.waist_joint,
        Level::Pelvis => &cfg.pelvis_joint,
    };
    match (joints.get(name), level) {
        (Some(p), _) => Ok(p),
        (None, Level::Waist) if cfg.waist_fallback => {
            let pelvis = joint(joints, &cfg.pelvis_joint)?;
            let chest = joint(joints, &cfg.chest_joint)?;
            Ok(nalgebra::center(&pelvis, &chest))
        }
        (None, _) => Err(MeasureError::MissingJoint(name.clone())),
    }
}

/// Even-odd test of `q` against the curve projected into the plane.
fn encloses(curve: &Polyline, plane: &Plane, q: [f64; 2]) -> bool {
    let pts: Vec<[f64; 2]> = curve.points().iter().map(|p| plane.project(p)).collect();
    let mut inside = false;
    let n = pts.len();
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        if (a[1] > q[1]) != (b[1] > q[1]) {
            let x = a[0] + (q[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if q[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

pub fn circumference_detail(
    mesh: &TriMesh,
    joints: &JointSet,
    cfg: &MeasurementConfig,
    level: Level,
) -> Result<GirthMeasurement, MeasureError> {
    let center = level_center(joints, cfg, level)?;
    let plane = Plane::horizontal(center);
    let q = plane.project(&center);
    let mut best: Option<(f64, Polyline)> = None;
    for c in slice_mesh(mesh, &plane) {
        if c.is_closed() && c.len() >= 3 && encloses(&c, &plane, q) {
            let perimeter = convex_hull_perimeter(&c, &plane)?;
            if best.as_ref().is_none_or(|(p, _)| perimeter > *p) {
                best = Some((perimeter, c));
            }
        }
    }
    let (perimeter, curve) = best.ok_or(MeasureError::NoEnclosingCurve { level, y: center.y })?;
    Ok(GirthMeasurement { perimeter, plane, curve })
}

pub fn circumference(mesh: &TriMesh, joints: &JointSet, cfg: &MeasurementConfig, level: Level) -> Result<f64, MeasureError> {
    Ok(circumference_detail(mesh, joints, cfg, level)?.perimeter)
}

/// All eight dimensions in canonical order.
pub fn measure_all(mesh: &TriMesh, joints: &JointSet, cfg: &MeasurementConfig) -> Result<HbdVector, MeasureError> {
    cfg.validate()?;
    joints.check_inside(&compute_aabb(mesh)?)?;
    let tag = |dimension: Dimension| move |e: MeasureError| MeasureError::Dimension {
        dimension,
        source: Box::new(e),
    };
    let values = [
        shoulder_width(mesh, joints, cfg).map_err(tag(Dimension::ShoulderWidth))?,
        arm_length(mesh, joints, cfg, Side::Right).map_err(tag(Dimension::RightArmLength))?,
        arm_length(mesh, joints, cfg, Side::Left).map_err(tag(Dimension::LeftArmLength))?,
        inseam(mesh, joints).map_err(tag(Dimension::Inseam))?,
        circumference(mesh, joints, cfg, Level::Chest).map_err(tag(Dimension::ChestCircumference))?,
        circumference(mesh, joints, cfg, Level::Waist).map_err(tag(Dimension::WaistCircumference))?,
        circumference(mesh, joints, cfg, Level::Pelvis).map_err(tag(Dimension::PelvisCircumference))?,
        height(mesh).map_err(tag(Dimension::Height))?,
    ];
    Ok(HbdVector::new(values)?)
}

/// Per-subject measurement file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub id: String,
    pub pose: Pose,
    pub gender: Gender,
    pub hbd: HbdVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

pub const CSV_HEADER: &str = "id,subject,gender,pose,shoulder_width,right_arm_length,left_arm_length,inseam,chest_circumference,waist_circumference,pelvis_circumference,height";

/// Aggregate CSV, one row per record, values in meters.
pub fn measurements_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a MeasurementRecord)>) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (subject, r) in rows {
        let _ = write!(out, "{},{},{},{}", r.id, subject, r.gender, r.pose);
        for v in r.hbd.values() {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}
