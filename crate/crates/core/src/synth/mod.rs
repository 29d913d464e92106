//! Procedural bodies whose eight dimensions are known in closed form.

mod body;
mod population;
pub mod primitives;

pub use body::{generate_body, pose_angles, BodyParams, GroundTruth, HbdTolerance, Section, SynthError, SyntheticBody};
pub use population::{generate_population, with_pose, GenderRanges, Population, PopulationMember, PopulationRanges, Range};
