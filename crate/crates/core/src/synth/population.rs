//! Seeded populations of procedural bodies.

use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::body::{generate_body, pose_angles, BodyParams, Section, SynthError, SyntheticBody};
use crate::dataset::{Gender, Manifest, Pose, SubjectRecord};

/// Closed interval sampled uniformly.
pub type Range = (f64, f64);

/// Proportions of one gender. Everything but `stature` is a fraction of
/// the drawn stature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenderRanges {
    pub stature: Range,
    pub crotch: Range,
    pub shoulder_height: Range,
    pub shoulder_half_span: Range,
    pub arm_radius: Range,
    pub upper_arm: Range,
    pub forearm: Range,
    pub hand: Range,
    /// Relative left-arm deviation from the right arm.
    pub arm_asymmetry: Range,
    pub leg_radius: Range,
    /// Gap from a leg's inner side to the midline.
    pub leg_gap: Range,
    pub pelvis_half_width: Range,
    pub pelvis_half_depth: Range,
    /// Pelvis level above the crotch.
    pub pelvis_rise: Range,
    pub waist_half_width: Range,
    pub waist_half_depth: Range,
    /// Waist level above the crotch.
    pub waist_rise: Range,
    pub chest_half_width: Range,
    pub chest_half_depth: Range,
    /// Chest level below the shoulder joints.
    pub chest_drop: Range,
    pub head_half_width: Range,
    pub head_half_depth: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationRanges {
    pub female: GenderRanges,
    pub male: GenderRanges,
    pub facets: usize,
    /// Torso band half height, as a fraction of stature.
    pub band_half_height: f64,
    /// Component clearance, as a fraction of stature.
    pub clearance: f64,
    /// Parameter draws tried per subject before giving up.
    pub max_attempts: usize,
}

impl Default for PopulationRanges {
    fn default() -> Self {
        let female = GenderRanges {
            stature: (1.50, 1.82),
            crotch: (0.44, 0.48),
            shoulder_height: (0.80, 0.83),
            shoulder_half_span: (0.118, 0.128),
            arm_radius: (0.022, 0.027),
            upper_arm: (0.158, 0.172),
            forearm: (0.140, 0.155),
            hand: (0.045, 0.055),
            arm_asymmetry: (-0.02, 0.02),
            leg_radius: (0.036, 0.043),
            leg_gap: (0.004, 0.010),
            pelvis_half_width: (0.080, 0.089),
            pelvis_half_depth: (0.056, 0.066),
            pelvis_rise: (0.040, 0.060),
            waist_half_width: (0.062, 0.072),
            waist_half_depth: (0.047, 0.057),
            waist_rise: (0.140, 0.165),
            chest_half_width: (0.076, 0.086),
            chest_half_depth: (0.060, 0.072),
            chest_drop: (0.095, 0.115),
            head_half_width: (0.042, 0.048),
            head_half_depth: (0.052, 0.058),
        };
        let male = GenderRanges {
            stature: (1.60, 1.96),
            shoulder_half_span: (0.124, 0.136),
            arm_radius: (0.024, 0.029),
            pelvis_half_width: (0.075, 0.084),
            pelvis_half_depth: (0.054, 0.062),
            waist_half_width: (0.066, 0.076),
            chest_half_width: (0.082, 0.092),
            chest_half_depth: (0.062, 0.074),
            ..female.clone()
        };
        PopulationRanges {
            female,
            male,
            facets: 64,
            band_half_height: 0.010,
            clearance: 0.0055,
            max_attempts: 200,
        }
    }
}

fn check_range(name: &str, r: Range) -> Result<(), SynthError> {
    if r.0.is_finite() && r.1.is_finite() && r.0 <= r.1 {
        Ok(())
    } else {
        Err(SynthError::Ranges(format!("{name} = [{}, {}]", r.0, r.1)))
    }
}

impl GenderRanges {
    fn all(&self) -> [(&'static str, Range); 22] {
        [
            ("stature", self.stature),
            ("crotch", self.crotch),
            ("shoulder_height", self.shoulder_height),
            ("shoulder_half_span", self.shoulder_half_span),
            ("arm_radius", self.arm_radius),
            ("upper_arm", self.upper_arm),
            ("forearm", self.forearm),
            ("hand", self.hand),
            ("arm_asymmetry", self.arm_asymmetry),
            ("leg_radius", self.leg_radius),
            ("leg_gap", self.leg_gap),
            ("pelvis_half_width", self.pelvis_half_width),
            ("pelvis_half_depth", self.pelvis_half_depth),
            ("pelvis_rise", self.pelvis_rise),
            ("waist_half_width", self.waist_half_width),
            ("waist_half_depth", self.waist_half_depth),
            ("waist_rise", self.waist_rise),
            ("chest_half_width", self.chest_half_width),
            ("chest_half_depth", self.chest_half_depth),
            ("chest_drop", self.chest_drop),
            ("head_half_width", self.head_half_width),
            ("head_half_depth", self.head_half_depth),
        ]
    }
}

impl PopulationRanges {
    pub fn validate(&self) -> Result<(), SynthError> {
        for g in [&self.female, &self.male] {
            for (name, r) in g.all() {
                check_range(name, r)?;
                if name != "arm_asymmetry" && r.0 <= 0.0 {
                    return Err(SynthError::Ranges(format!("{name} must be positive")));
                }
            }
            if g.arm_asymmetry.0 <= -1.0 {
                return Err(SynthError::Ranges("arm_asymmetry must exceed -1".into()));
            }
        }
        if self.facets < 16 || self.facets % 2 != 0 {
            return Err(SynthError::Facets(self.facets));
        }
        if !(self.band_half_height > 0.0 && self.clearance > 0.0) {
            return Err(SynthError::Ranges("band_half_height and clearance must be positive".into()));
        }
        if self.max_attempts == 0 {
            return Err(SynthError::Ranges("max_attempts must be positive".into()));
        }
        Ok(())
    }

    /// Draws one pose-0 parameter set.
    pub fn sample(&self, gender: Gender, rng: &mut impl Rng) -> BodyParams {
        let g = match gender {
            Gender::Female => &self.female,
            Gender::Male => &self.male,
        };
        let mut u = |r: Range| if r.0 == r.1 { r.0 } else { rng.gen_range(r.0..=r.1) };
        let h = u(g.stature);
        let crotch = h * u(g.crotch);
        let shoulder = h * u(g.shoulder_height);
        let upper = h * u(g.upper_arm);
        let fore = h * u(g.forearm);
        let asym = 1.0 + u(g.arm_asymmetry);
        let leg_radius = h * u(g.leg_radius);
        let (a0, b0) = pose_angles(Pose::Pose0);
        BodyParams {
            stature: h,
            crotch_height: crotch,
            shoulder_height: shoulder,
            shoulder_half_span: h * u(g.shoulder_half_span),
            arm_radius: h * u(g.arm_radius),
            upper_arm_length: [upper, upper * asym],
            forearm_length: [fore, fore * asym],
            hand_length: h * u(g.hand),
            leg_radius,
            leg_half_spacing: leg_radius + h * u(g.leg_gap),
            pelvis: Section {
                half_width: h * u(g.pelvis_half_width),
                half_depth: h * u(g.pelvis_half_depth),
                height: crotch + h * u(g.pelvis_rise),
            },
            waist: Section {
                half_width: h * u(g.waist_half_width),
                half_depth: h * u(g.waist_half_depth),
                height: crotch + h * u(g.waist_rise),
            },
            chest: Section {
                half_width: h * u(g.chest_half_width),
                half_depth: h * u(g.chest_half_depth),
                height: shoulder - h * u(g.chest_drop),
            },
            head_half_width: h * u(g.head_half_width),
            head_half_depth: h * u(g.head_half_depth),
            band_half_height: h * self.band_half_height,
            clearance: h * self.clearance,
            facets: self.facets,
            pose: Pose::Pose0,
            abduction_deg: a0,
            elbow_flexion_deg: b0,
        }
    }
}

pub fn with_pose(p: &BodyParams, pose: Pose) -> BodyParams {
    let (abduction_deg, elbow_flexion_deg) = pose_angles(pose);
    BodyParams {
        pose,
        abduction_deg,
        elbow_flexion_deg,
        ..p.clone()
    }
}

/// One posed mesh of a population.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationMember {
    pub record: SubjectRecord,
    pub params: BodyParams,
    pub body: SyntheticBody,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub seed: u64,
    pub members: Vec<PopulationMember>,
}

/// Per-subject random stream, so subjects can be drawn independently.
fn subject_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Draws `n` subjects, alternating female and male, each in both poses.
/// Draws that fail body validation in either pose are redrawn from the
/// subject's own stream.
pub fn generate_population(n: usize, seed: u64, ranges: &PopulationRanges) -> Result<Population, SynthError> {
    if n == 0 {
        return Err(SynthError::Ranges("population size must be positive".into()));
    }
    ranges.validate()?;
    let mut members = Vec::with_capacity(2 * n);
    for i in 0..n {
        let gender = if i % 2 == 0 { Gender::Female } else { Gender::Male };
        let mut rng = subject_rng(seed, i);
        let subject = format!("s{i:05}");
        let mut drawn = None;
        for _ in 0..ranges.max_attempts {
            let p0 = ranges.sample(gender, &mut rng);
            let mesh_seed: u64 = rng.gen();
            let bodies: Result<Vec<_>, _> = [Pose::Pose0, Pose::Pose1]
                .iter()
                .enumerate()
                .map(|(k, &pose)| {
                    let p = with_pose(&p0, pose);
                    generate_body(&p, mesh_seed.wrapping_add(k as u64)).map(|b| (p, b))
                })
                .collect();
            if let Ok(b) = bodies {
                drawn = Some(b);
                break;
            }
        }
        let bodies = drawn.ok_or(SynthError::Exhausted(ranges.max_attempts))?;
        for (params, body) in bodies {
            let id = format!("{subject}_{}", params.pose);
            let record = SubjectRecord {
                id: id.clone(),
                subject: subject.clone(),
                gender,
                pose: params.pose,
                mesh: Path::new("meshes").join(format!("{id}.obj")),
                joints: Path::new("joints").join(format!("{id}.json")),
                ground_truth: Some(Path::new("ground_truth").join(format!("{id}.json"))),
            };
            members.push(PopulationMember { record, params, body });
        }
    }
    Ok(Population { seed, members })
}

impl Population {
    pub fn manifest(&self) -> Manifest {
        let mut m = Manifest::new(self.members.iter().map(|m| m.record.clone()).collect());
        m.seed = Some(self.seed);
        m
    }
}
