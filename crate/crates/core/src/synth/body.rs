//! Procedural test body with closed-form dimensions.
//!
//! The body is five closed components separated by small gaps: two leg
//! prisms, a torso lofted through elliptical sections, a head prism, and one
//! mitered tube running hand-elbow-shoulder-shoulder-elbow-hand. The torso
//! has a short straight band around each girth level, so horizontal slices
//! there are exact inscribed ellipse polygons. The tube's polygon phase puts
//! a flat face in the frontal plane z = 0. The outline of the arms in that
//! plane is therefore a polyline offset from the arm axis by the apothem,
//! and the top of the shoulder bar is a straight line.

use std::collections::BTreeMap;

use nalgebra::{Point3, Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::primitives::{ellipse_ring, swept_tube_rings, MeshBuilder, TubeError};
use crate::dataset::{Dimension, HbdRangeError, HbdVector, Pose};
use crate::mesh::{self, JointSet, TriMesh};

/// A horizontal elliptical torso section at a joint height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub height: f64,
    pub half_width: f64,
    pub half_depth: f64,
}

/// Shape and pose of one procedural body. Lengths in meters, angles in
/// degrees. Index 0 of the per-side arrays is the right side (−x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyParams {
    pub stature: f64,
    pub crotch_height: f64,
    /// Height of the shoulder joints, on the shoulder bar's axis.
    pub shoulder_height: f64,
    /// |x| of the shoulder joints.
    pub shoulder_half_span: f64,
    pub arm_radius: f64,
    pub upper_arm_length: [f64; 2],
    pub forearm_length: [f64; 2],
    /// Tube length beyond the wrist joint.
    pub hand_length: f64,
    pub leg_radius: f64,
    /// |x| of the leg axes.
    pub leg_half_spacing: f64,
    pub pelvis: Section,
    pub waist: Section,
    pub chest: Section,
    pub head_half_width: f64,
    pub head_half_depth: f64,
    /// Half height of the straight torso band at each girth level.
    pub band_half_height: f64,
    /// Minimum gap between separate components.
    pub clearance: f64,
    pub facets: usize,
    pub pose: Pose,
    /// Rotation of the whole arm away from the body, about the shoulder joint.
    pub abduction_deg: f64,
    /// Forearm rotation back toward the body, relative to the upper arm.
    pub elbow_flexion_deg: f64,
}

/// Default arm angles for a pose: (abduction, elbow flexion) in degrees.
pub fn pose_angles(pose: Pose) -> (f64, f64) {
    match pose {
        Pose::Pose0 => (12.0, 16.0),
        Pose::Pose1 => (30.0, 40.0),
    }
}

impl BodyParams {
    /// A 1.75 m reference body.
    pub fn reference(pose: Pose) -> Self {
        let (abduction_deg, elbow_flexion_deg) = pose_angles(pose);
        BodyParams {
            stature: 1.75,
            crotch_height: 0.80,
            shoulder_height: 1.42,
            shoulder_half_span: 0.215,
            arm_radius: 0.045,
            upper_arm_length: [0.29, 0.29],
            forearm_length: [0.26, 0.26],
            hand_length: 0.09,
            leg_radius: 0.07,
            leg_half_spacing: 0.085,
            pelvis: Section {
                height: 0.88,
                half_width: 0.15,
                half_depth: 0.105,
            },
            waist: Section {
                height: 1.07,
                half_width: 0.125,
                half_depth: 0.09,
            },
            chest: Section {
                height: 1.24,
                half_width: 0.15,
                half_depth: 0.115,
            },
            head_half_width: 0.078,
            head_half_depth: 0.096,
            band_half_height: 0.018,
            clearance: 0.01,
            facets: 64,
            pose,
            abduction_deg,
            elbow_flexion_deg,
        }
    }

    /// Same proportions at `factor` times the size.
    pub fn scaled(&self, factor: f64) -> Self {
        let s = |v: f64| v * factor;
        let sec = |c: Section| Section {
            height: s(c.height),
            half_width: s(c.half_width),
            half_depth: s(c.half_depth),
        };
        BodyParams {
            stature: s(self.stature),
            crotch_height: s(self.crotch_height),
            shoulder_height: s(self.shoulder_height),
            shoulder_half_span: s(self.shoulder_half_span),
            arm_radius: s(self.arm_radius),
            upper_arm_length: self.upper_arm_length.map(s),
            forearm_length: self.forearm_length.map(s),
            hand_length: s(self.hand_length),
            leg_radius: s(self.leg_radius),
            leg_half_spacing: s(self.leg_half_spacing),
            pelvis: sec(self.pelvis),
            waist: sec(self.waist),
            chest: sec(self.chest),
            head_half_width: s(self.head_half_width),
            head_half_depth: s(self.head_half_depth),
            band_half_height: s(self.band_half_height),
            clearance: s(self.clearance),
            ..self.clone()
        }
    }

    /// Apothem of the arm tube's polygon.
    pub fn arm_apothem(&self) -> f64 {
        self.arm_radius * (std::f64::consts::PI / self.facets as f64).cos()
    }

    fn torso_top(&self) -> f64 {
        self.shoulder_height - self.arm_radius - self.clearance
    }

    fn head_bottom(&self) -> f64 {
        self.shoulder_height + self.arm_radius + self.clearance
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("parameter {name} = {value} is invalid: {reason}")]
    Param {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("facet count {0} must be even and at least 16")]
    Facets(usize),
    #[error("torso levels must increase: {0}")]
    Levels(&'static str),
    #[error("arm tube: {0}")]
    Tube(#[from] TubeError),
    #[error("{side} arm intersects the {part}")]
    Collision { side: &'static str, part: &'static str },
    #[error("{side} arm outline is not measurable: {reason}")]
    ArmOutline { side: &'static str, reason: &'static str },
    #[error("ground truth out of range: {0}")]
    Range(#[from] HbdRangeError),
    #[error("invalid population ranges: {0}")]
    Ranges(String),
    #[error("no valid body after {0} draws")]
    Exhausted(usize),
}

/// Analytic dimensions of a generated body, with the tolerance each
/// measured value must meet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub hbd: HbdVector,
    pub tolerance: HbdTolerance,
}

/// Absolute tolerance per dimension, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HbdTolerance(pub [f64; 8]);

impl GroundTruth {
    /// Exact for height, inseam and girths; 1% for the curve-path lengths,
    /// whose extraction goes through tolerance-based landmark search.
    fn new(hbd: HbdVector) -> Self {
        let mut tol = [0.0; 8];
        for d in Dimension::ALL {
            tol[d.index()] = match d {
                Dimension::Height | Dimension::Inseam => 1e-6,
                Dimension::ChestCircumference | Dimension::WaistCircumference | Dimension::PelvisCircumference => 1e-9,
                _ => 0.01 * hbd.get(d),
            };
        }
        GroundTruth {
            hbd,
            tolerance: HbdTolerance(tol),
        }
    }

    /// Dimensions whose measured value misses the tolerance, with the error.
    pub fn failures(&self, measured: &HbdVector) -> Vec<(Dimension, f64)> {
        Dimension::ALL
            .iter()
            .filter_map(|&d| {
                let err = measured.get(d) - self.hbd.get(d);
                (!(err.abs() <= self.tolerance.0[d.index()])).then_some((d, err))
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ground truth serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBody {
    pub mesh: TriMesh,
    pub joints: JointSet,
    pub ground_truth: GroundTruth,
}

/// Arm geometry of one side in the frontal (x, y) plane.
#[derive(Debug, Clone, Copy)]
struct ArmLayout {
    sign: f64,
    shoulder: Vector2<f64>,
    elbow: Vector2<f64>,
    wrist: Vector2<f64>,
    hand: Vector2<f64>,
    upper_dir: Vector2<f64>,
    fore_dir: Vector2<f64>,
    upper_normal: Vector2<f64>,
    fore_normal: Vector2<f64>,
}

/// Intersection of the lines p + s·d and q + t·e.
fn line_intersection(p: Vector2<f64>, d: Vector2<f64>, q: Vector2<f64>, e: Vector2<f64>) -> Option<Vector2<f64>> {
    let den = d.x * e.y - d.y * e.x;
    if den.abs() < 1e-12 {
        return None;
    }
    let w = q - p;
    let s = (w.x * e.y - w.y * e.x) / den;
    Some(p + d * s)
}

impl ArmLayout {
    fn new(p: &BodyParams, side: usize) -> Self {
        let sign = if side == 0 { -1.0 } else { 1.0 };
        let t1 = p.abduction_deg.to_radians();
        let t2 = (p.abduction_deg - p.elbow_flexion_deg).to_radians();
        // direction at angle t from straight down, toward this side
        let dir = |t: f64| Vector2::new(sign * t.sin(), -t.cos());
        let normal = |t: f64| Vector2::new(sign * t.cos(), t.sin());
        let shoulder = Vector2::new(sign * p.shoulder_half_span, p.shoulder_height);
        let elbow = shoulder + dir(t1) * p.upper_arm_length[side];
        let wrist = elbow + dir(t2) * p.forearm_length[side];
        let hand = wrist + dir(t2) * p.hand_length;
        ArmLayout {
            sign,
            shoulder,
            elbow,
            wrist,
            hand,
            upper_dir: dir(t1),
            fore_dir: dir(t2),
            upper_normal: normal(t1),
            fore_normal: normal(t2),
        }
    }

    /// Outer outline corners and the three landmarks, for apothem `a`:
    /// (shoulder landmark, shoulder corner, elbow corner, elbow landmark, wrist landmark).
    fn outline(&self, a: f64) -> Outline {
        let top_point = Vector2::new(0.0, self.shoulder.y + a);
        let upper_point = self.shoulder + self.upper_normal * a;
        let fore_point = self.elbow + self.fore_normal * a;
        let shoulder_corner = line_intersection(top_point, Vector2::x(), upper_point, self.upper_dir)
            .expect("arm is never horizontal");
        let elbow_corner = line_intersection(upper_point, self.upper_dir, fore_point, self.fore_dir);
        let wrist_mark = line_intersection(fore_point, self.fore_dir, self.wrist, Vector2::x()).expect("forearm not horizontal");
        let elbow_mark = {
            // first outline crossing of the horizontal through the elbow
            let on_upper = line_intersection(upper_point, self.upper_dir, self.elbow, Vector2::x());
            let on_fore = line_intersection(fore_point, self.fore_dir, self.elbow, Vector2::x());
            match (elbow_corner, on_upper, on_fore) {
                (Some(c), Some(u), Some(f)) => {
                    if (u - c).dot(&self.upper_dir) <= 0.0 {
                        u
                    } else {
                        f
                    }
                }
                (_, Some(u), _) => u,
                _ => on_fore.expect("forearm not horizontal"),
            }
        };
        Outline {
            shoulder_mark: Vector2::new(self.shoulder.x, self.shoulder.y + a),
            shoulder_corner,
            elbow_corner,
            elbow_mark,
            wrist_mark,
            hand_corner: self.hand + self.fore_normal * a,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Outline {
    shoulder_mark: Vector2<f64>,
    shoulder_corner: Vector2<f64>,
    elbow_corner: Option<Vector2<f64>>,
    elbow_mark: Vector2<f64>,
    wrist_mark: Vector2<f64>,
    hand_corner: Vector2<f64>,
}

impl Outline {
    /// Path along the outer skin from the shoulder landmark to the wrist landmark.
    fn arm_length(&self) -> f64 {
        let mut pts = vec![self.shoulder_mark, self.shoulder_corner];
        pts.extend(self.elbow_corner);
        pts.push(self.wrist_mark);
        pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<(), SynthError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(SynthError::Param {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}

fn validate(p: &BodyParams) -> Result<(), SynthError> {
    let lengths = [
        ("stature", p.stature),
        ("crotch_height", p.crotch_height),
        ("shoulder_height", p.shoulder_height),
        ("shoulder_half_span", p.shoulder_half_span),
        ("arm_radius", p.arm_radius),
        ("right upper_arm_length", p.upper_arm_length[0]),
        ("left upper_arm_length", p.upper_arm_length[1]),
        ("right forearm_length", p.forearm_length[0]),
        ("left forearm_length", p.forearm_length[1]),
        ("hand_length", p.hand_length),
        ("leg_radius", p.leg_radius),
        ("leg_half_spacing", p.leg_half_spacing),
        ("pelvis.half_width", p.pelvis.half_width),
        ("pelvis.half_depth", p.pelvis.half_depth),
        ("waist.half_width", p.waist.half_width),
        ("waist.half_depth", p.waist.half_depth),
        ("chest.half_width", p.chest.half_width),
        ("chest.half_depth", p.chest.half_depth),
        ("head_half_width", p.head_half_width),
        ("head_half_depth", p.head_half_depth),
        ("band_half_height", p.band_half_height),
        ("clearance", p.clearance),
    ];
    for (name, v) in lengths {
        check_positive(name, v)?;
    }
    if p.facets < 16 || p.facets % 2 != 0 {
        return Err(SynthError::Facets(p.facets));
    }
    if !(p.abduction_deg.is_finite() && (-30.0..=80.0).contains(&p.abduction_deg)) {
        return Err(SynthError::Param {
            name: "abduction_deg",
            value: p.abduction_deg,
            reason: "must lie in [-30, 80]",
        });
    }
    if !(p.elbow_flexion_deg.is_finite() && (0.0..=120.0).contains(&p.elbow_flexion_deg)) {
        return Err(SynthError::Param {
            name: "elbow_flexion_deg",
            value: p.elbow_flexion_deg,
            reason: "must lie in [0, 120]",
        });
    }
    if p.crotch_height >= p.stature {
        return Err(SynthError::Levels("crotch below stature"));
    }
    let d = p.band_half_height;
    let c = p.clearance;
    let levels = [
        (p.crotch_height + d, p.pelvis.height, "pelvis band above crotch"),
        (p.pelvis.height + d, p.waist.height - d, "waist band above pelvis band"),
        (p.waist.height + d, p.chest.height - d, "chest band above waist band"),
        (p.chest.height + d, p.torso_top(), "torso top above chest band"),
        (p.head_bottom() + c, p.stature, "head above shoulders"),
        (p.crotch_height + c, 0.65 * p.stature + c, "shoulder plane height above crotch"),
        (0.65 * p.stature + c, p.shoulder_height, "shoulder plane height below shoulders"),
    ];
    for (lo, hi, what) in levels {
        if !(lo < hi) {
            return Err(SynthError::Levels(what));
        }
    }
    if p.leg_half_spacing - p.leg_radius < c / 2.0 {
        return Err(SynthError::Param {
            name: "leg_half_spacing",
            value: p.leg_half_spacing,
            reason: "legs must not touch",
        });
    }
    Ok(())
}

/// Checks the outline of each arm can be measured unambiguously: the
/// landmarks sit on the straight parts of the outline, and the subcurve
/// from shoulder to wrist along the outside reaches further out than
/// anything on the other subcurve.
fn check_outline(p: &BodyParams, side: usize, arm: &ArmLayout, o: &Outline) -> Result<(), SynthError> {
    let name = if side == 0 { "right" } else { "left" };
    let err = |reason| Err(SynthError::ArmOutline { side: name, reason });
    let c = p.clearance;
    let e = |v: Vector2<f64>| arm.sign * v.x;
    if e(o.shoulder_corner) < e(o.shoulder_mark) + c {
        return err("shoulder corner too close to the shoulder landmark");
    }
    let fore_start = o.elbow_corner.unwrap_or(o.shoulder_corner);
    let wrist_t = (o.wrist_mark - fore_start).dot(&arm.fore_dir);
    let hand_t = (o.hand_corner - fore_start).dot(&arm.fore_dir);
    if wrist_t < c || hand_t - wrist_t < c {
        return err("wrist landmark not on the forearm's outer side");
    }
    if let Some(ce) = o.elbow_corner {
        let upper_t = (ce - o.shoulder_corner).dot(&arm.upper_dir);
        if upper_t < c {
            return err("elbow corner above the shoulder corner");
        }
    }
    let chosen = e(o.shoulder_corner).max(o.elbow_corner.map_or(f64::NEG_INFINITY, e));
    let rejected = e(o.wrist_mark).max(e(o.hand_corner));
    if chosen < rejected + c / 4.0 {
        return err("hand reaches further out than the elbow");
    }
    let area = {
        let (a, b, w) = (o.shoulder_mark, o.elbow_mark, o.wrist_mark);
        0.5 * ((b - a).x * (w - a).y - (b - a).y * (w - a).x).abs()
    };
    if area < c * c {
        return err("shoulder, elbow and wrist landmarks nearly colinear");
    }
    Ok(())
}

/// Rejects tube faces that come within the clearance of another component.
fn check_clearance(p: &BodyParams, tube: &TriMesh) -> Result<(), SynthError> {
    let c = p.clearance;
    let torso_reach = p.pelvis.half_width.max(p.waist.half_width).max(p.chest.half_width);
    let zones = [
        ("torso", p.crotch_height - c, p.torso_top() + c, torso_reach + c),
        ("legs", f64::NEG_INFINITY, p.crotch_height, p.leg_half_spacing + p.leg_radius + c),
        ("head", p.head_bottom() - c, f64::INFINITY, p.head_half_width + c),
    ];
    for f in 0..tube.faces().len() {
        let tri = tube.triangle(f);
        let y_lo = tri.iter().map(|v| v.y).fold(f64::INFINITY, f64::min);
        let y_hi = tri.iter().map(|v| v.y).fold(f64::NEG_INFINITY, f64::max);
        let side = if tri.iter().map(|v| v.x).sum::<f64>() < 0.0 { "right" } else { "left" };
        if y_lo < c {
            return Err(SynthError::Collision { side, part: "floor" });
        }
        for (part, lo, hi, reach) in zones {
            if y_hi < lo || y_lo > hi {
                continue;
            }
            let sx = tri[0].x.signum();
            if tri.iter().any(|v| v.x.abs() < reach || v.x.signum() != sx) {
                return Err(SynthError::Collision { side, part });
            }
        }
    }
    Ok(())
}

fn polygon_perimeter(a: f64, b: f64, n: usize) -> f64 {
    let ring = ellipse_ring(&Point3::origin(), a, b, n, 0.0);
    (0..n).map(|k| (ring[(k + 1) % n] - ring[k]).norm()).sum()
}

/// Builds the mesh, joints and analytic dimensions. The seed only picks
/// quad diagonals; geometry and ground truth depend on `params` alone.
pub fn generate_body(p: &BodyParams, seed: u64) -> Result<SyntheticBody, SynthError> {
    validate(p)?;
    let n = p.facets;
    let a = p.arm_apothem();
    let arms = [ArmLayout::new(p, 0), ArmLayout::new(p, 1)];
    let outlines = [arms[0].outline(a), arms[1].outline(a)];
    for side in 0..2 {
        check_outline(p, side, &arms[side], &outlines[side])?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next = || Some(ChaCha8Rng::from_rng(&mut rng).expect("chacha seeding"));
    let at = |v: Vector2<f64>| Point3::new(v.x, v.y, 0.0);

    let path = [
        at(arms[0].hand),
        at(arms[0].elbow),
        at(arms[0].shoulder),
        at(arms[1].shoulder),
        at(arms[1].elbow),
        at(arms[1].hand),
    ];
    let rings = swept_tube_rings(&path, p.arm_radius, n, &Vector3::z())?;
    let mut b = MeshBuilder::new(next());
    b.loft(&rings, Some(path[0]), Some(path[5]));
    let tube = b.finish();
    check_clearance(p, &tube)?;

    let mut parts = vec![tube];

    let d = p.band_half_height;
    let ring = |y: f64, s: &Section| ellipse_ring(&Point3::new(0.0, y, 0.0), s.half_width, s.half_depth, n, 0.0);
    let torso_rings = vec![
        ring(p.crotch_height, &p.pelvis),
        ring(p.pelvis.height + d, &p.pelvis),
        ring(p.waist.height - d, &p.waist),
        ring(p.waist.height + d, &p.waist),
        ring(p.chest.height - d, &p.chest),
        ring(p.torso_top(), &p.chest),
    ];
    let mut b = MeshBuilder::new(next());
    b.loft(
        &torso_rings,
        Some(Point3::new(0.0, p.crotch_height, 0.0)),
        Some(Point3::new(0.0, p.torso_top(), 0.0)),
    );
    parts.push(b.finish());

    let leg_top = p.crotch_height - p.clearance;
    for sign in [-1.0, 1.0] {
        let base = Point3::new(sign * p.leg_half_spacing, 0.0, 0.0);
        let top = Point3::new(base.x, leg_top, 0.0);
        let mut b = MeshBuilder::new(next());
        b.loft(
            &[
                ellipse_ring(&base, p.leg_radius, p.leg_radius, n, 0.0),
                ellipse_ring(&top, p.leg_radius, p.leg_radius, n, 0.0),
            ],
            Some(base),
            Some(top),
        );
        parts.push(b.finish());
    }

    let head_base = Point3::new(0.0, p.head_bottom(), 0.0);
    let head_top = Point3::new(0.0, p.stature, 0.0);
    let mut b = MeshBuilder::new(next());
    b.loft(
        &[
            ellipse_ring(&head_base, p.head_half_width, p.head_half_depth, n, 0.0),
            ellipse_ring(&head_top, p.head_half_width, p.head_half_depth, n, 0.0),
        ],
        Some(head_base),
        Some(head_top),
    );
    parts.push(b.finish());

    let mesh = TriMesh::merge(&parts);

    let mut joints = BTreeMap::new();
    let names = [
        (mesh::RIGHT_SHOULDER, mesh::LEFT_SHOULDER, arms[0].shoulder, arms[1].shoulder),
        (mesh::RIGHT_ELBOW, mesh::LEFT_ELBOW, arms[0].elbow, arms[1].elbow),
        (mesh::RIGHT_WRIST, mesh::LEFT_WRIST, arms[0].wrist, arms[1].wrist),
    ];
    for (r, l, pr, pl) in names {
        joints.insert(r.to_string(), at(pr));
        joints.insert(l.to_string(), at(pl));
    }
    joints.insert(mesh::PELVIS.to_string(), Point3::new(0.0, p.pelvis.height, 0.0));
    joints.insert(mesh::WAIST.to_string(), Point3::new(0.0, p.waist.height, 0.0));
    joints.insert(mesh::CHEST.to_string(), Point3::new(0.0, p.chest.height, 0.0));
    let joints = JointSet::new(joints).expect("generated joints are finite and complete");

    let hbd = HbdVector::new([
        2.0 * p.shoulder_half_span,
        outlines[0].arm_length(),
        outlines[1].arm_length(),
        p.crotch_height,
        polygon_perimeter(p.chest.half_width, p.chest.half_depth, n),
        polygon_perimeter(p.waist.half_width, p.waist.half_depth, n),
        polygon_perimeter(p.pelvis.half_width, p.pelvis.half_depth, n),
        p.stature,
    ])?;

    Ok(SyntheticBody {
        mesh,
        joints,
        ground_truth: GroundTruth::new(hbd),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{slice_mesh, Plane};
    use crate::mesh::compute_aabb;

    #[test]
    fn reference_bodies_generate() {
        for pose in [Pose::Pose0, Pose::Pose1] {
            let body = generate_body(&BodyParams::reference(pose), 1).unwrap();
            let aabb = compute_aabb(&body.mesh).unwrap();
            assert_eq!(aabb.min.y, 0.0);
            assert_eq!(aabb.max.y, 1.75);
            body.joints.check_inside(&aabb).unwrap();
        }
    }

    #[test]
    fn every_component_is_closed() {
        let body = generate_body(&BodyParams::reference(Pose::Pose1), 9).unwrap();
        let mut counts = std::collections::HashMap::new();
        for f in body.mesh.faces() {
            for k in 0..3 {
                *counts.entry((f[k], f[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        for (&(a, b), &c) in &counts {
            assert_eq!(c, 1);
            assert_eq!(counts.get(&(b, a)), Some(&1));
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let p = BodyParams::reference(Pose::Pose0);
        let a = generate_body(&p, 5).unwrap().mesh.to_obj_string();
        let b = generate_body(&p, 5).unwrap().mesh.to_obj_string();
        let c = generate_body(&p, 6).unwrap().mesh.to_obj_string();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn ground_truth_ignores_seed() {
        let p = BodyParams::reference(Pose::Pose1);
        assert_eq!(
            generate_body(&p, 1).unwrap().ground_truth,
            generate_body(&p, 2).unwrap().ground_truth
        );
    }

    #[test]
    fn scaling_scales_ground_truth() {
        let p = BodyParams::reference(Pose::Pose1).scaled(1.5 / 1.75);
        let big = p.scaled(2.0 / 1.5);
        let a = generate_body(&p, 0).unwrap().ground_truth.hbd;
        let b = generate_body(&big, 0).unwrap().ground_truth.hbd;
        for d in Dimension::ALL {
            assert!((b.get(d) / a.get(d) - 4.0 / 3.0).abs() < 1e-12, "{d}");
        }
    }

    #[test]
    fn girth_bands_slice_to_the_section_polygon() {
        let p = BodyParams::reference(Pose::Pose0);
        let body = generate_body(&p, 3).unwrap();
        let curves = slice_mesh(&body.mesh, &Plane::horizontal(Point3::new(0.0, p.waist.height, 0.0)));
        let torso = curves
            .iter()
            .find(|c| c.min_x() < 0.0 && c.max_x() > 0.0)
            .expect("torso section");
        let expected = body.ground_truth.hbd.get(Dimension::WaistCircumference);
        assert!((torso.length() - expected).abs() < 1e-12);
    }

    #[test]
    fn arm_ground_truth_by_hand_for_hanging_arm() {
        // straight arm hanging 0 degrees: corner at the top-outer edge of the
        // shoulder bar, then straight down to the wrist height
        let mut p = BodyParams::reference(Pose::Pose0);
        p.abduction_deg = -4.0;
        p.elbow_flexion_deg = 0.0;
        p.shoulder_half_span = 0.26;
        let arm = ArmLayout::new(&p, 0);
        let a = p.arm_apothem();
        let o = arm.outline(a);
        assert!(o.elbow_corner.is_none());
        let t = (-4.0f64).to_radians();
        let corner_to_wrist = (o.shoulder_corner - o.wrist_mark).norm();
        // wrist landmark sits a·tan(t) further along the arm than the wrist joint
        let along = p.upper_arm_length[0] + p.forearm_length[0] + a * t.tan();
        let corner_along = -a * (1.0 - t.sin()) / t.cos();
        assert!((corner_to_wrist - (along - corner_along)).abs() < 1e-12);
    }

    #[test]
    fn bad_params_are_rejected() {
        let mut p = BodyParams::reference(Pose::Pose0);
        p.facets = 15;
        assert_eq!(generate_body(&p, 0), Err(SynthError::Facets(15)));

        let mut p = BodyParams::reference(Pose::Pose0);
        p.crotch_height = 2.0;
        assert!(matches!(generate_body(&p, 0), Err(SynthError::Levels(_))));

        // arms hanging straight inside the hips
        let mut p = BodyParams::reference(Pose::Pose0);
        p.shoulder_half_span = 0.16;
        assert!(matches!(generate_body(&p, 0), Err(SynthError::Collision { .. })));

        // forearm swinging outward past the elbow
        let mut p = BodyParams::reference(Pose::Pose1);
        p.elbow_flexion_deg = 18.75;
        assert!(matches!(generate_body(&p, 0), Err(SynthError::ArmOutline { .. })));
    }
}
