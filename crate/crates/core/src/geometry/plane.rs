use nalgebra::{Point3, Unit, Vector3};

use super::GeometryError;

/// Triangles below this area are treated as colinear point triples.
const MIN_TRIANGLE_AREA: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub origin: Point3<f64>,
    pub normal: Unit<Vector3<f64>>,
}

impl Plane {
    pub fn new(origin: Point3<f64>, normal: Vector3<f64>) -> Result<Self, GeometryError> {
        let normal = Unit::try_new(normal, 0.0).ok_or(GeometryError::ZeroNormal)?;
        Ok(Plane { origin, normal })
    }

    pub fn horizontal(origin: Point3<f64>) -> Self {
        Plane {
            origin,
            normal: Vector3::y_axis(),
        }
    }

    pub fn signed_distance(&self, p: &Point3<f64>) -> f64 {
        self.normal.dot(&(p - self.origin))
    }

    /// Two unit vectors spanning the plane; `(u, v, normal)` is right-handed.
    pub fn basis(&self) -> (Vector3<f64>, Vector3<f64>) {
        let n = self.normal.into_inner();
        // pick the world axis least aligned with the normal
        let helper = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
            Vector3::x()
        } else if n.y.abs() <= n.z.abs() {
            Vector3::y()
        } else {
            Vector3::z()
        };
        let u = (helper - n * n.dot(&helper)).normalize();
        let v = n.cross(&u);
        (u, v)
    }

    /// In-plane coordinates of `p` with respect to [`Plane::basis`].
    pub fn project(&self, p: &Point3<f64>) -> [f64; 2] {
        let (u, v) = self.basis();
        let d = p - self.origin;
        [d.dot(&u), d.dot(&v)]
    }
}

pub fn plane_from_points(
    p1: &Point3<f64>,
    p2: &Point3<f64>,
    p3: &Point3<f64>,
) -> Result<Plane, GeometryError> {
    let n = (p2 - p1).cross(&(p3 - p1));
    let area = 0.5 * n.norm();
    if !(area > MIN_TRIANGLE_AREA) {
        return Err(GeometryError::Colinear { area });
    }
    Plane::new(*p1, n)
}
