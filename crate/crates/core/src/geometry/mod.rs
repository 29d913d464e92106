//! Measurement machinery: ray casting, plane slicing, curve splitting and
//! convex hull perimeters.

mod curve;
mod hull;
mod plane;
mod ray;
mod slice;

pub use curve::{locate_on_curve, polyline_length, split_closed_curve, CurvePosition, Polyline};
pub use hull::{convex_hull_2d, convex_hull_perimeter, hull_perimeter_2d};
pub use plane::{plane_from_points, Plane};
pub use ray::{ray_mesh_intersections, RayHit};
pub use slice::{slice_mesh, CHAIN_EPSILON, ON_PLANE_EPSILON, ON_PLANE_NUDGE};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("points are colinear (triangle area {area:e} m^2)")]
    Colinear { area: f64 },
    #[error("plane normal has zero length")]
    ZeroNormal,
    #[error("polyline needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("split positions coincide")]
    IdenticalSplit,
    #[error("curve must be closed to be split in two")]
    OpenCurve,
    #[error("consecutive polyline points {index} and {next} coincide")]
    RepeatedPoint { index: usize, next: usize },
}
