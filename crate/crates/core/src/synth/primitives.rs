//! Closed triangle-mesh primitives: boxes, prisms, lofts and swept tubes.

use nalgebra::{Point3, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::mesh::TriMesh;

/// Accumulates one closed component. Quads are split along a diagonal
/// drawn from the optional RNG, so different seeds give different
/// triangulations of the same surface.
pub struct MeshBuilder {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
    rng: Option<ChaCha8Rng>,
}

impl MeshBuilder {
    pub fn new(rng: Option<ChaCha8Rng>) -> Self {
        MeshBuilder {
            vertices: Vec::new(),
            faces: Vec::new(),
            rng,
        }
    }

    pub fn vertex(&mut self, p: Point3<f64>) -> usize {
        self.vertices.push(p);
        self.vertices.len() - 1
    }

    pub fn triangle(&mut self, a: usize, b: usize, c: usize) {
        self.faces.push([a, b, c]);
    }

    /// Quad `a b c d` in cyclic order.
    pub fn quad(&mut self, a: usize, b: usize, c: usize, d: usize) {
        let alt = self.rng.as_mut().is_some_and(|r| r.gen::<bool>());
        if alt {
            self.faces.push([a, b, d]);
            self.faces.push([b, c, d]);
        } else {
            self.faces.push([a, b, c]);
            self.faces.push([a, c, d]);
        }
    }

    /// Bands of quads between consecutive rings of equal size, with optional
    /// fan caps around the given centers.
    pub fn loft(&mut self, rings: &[Vec<Point3<f64>>], start_cap: Option<Point3<f64>>, end_cap: Option<Point3<f64>>) {
        assert!(rings.len() >= 2, "a loft needs two rings");
        let n = rings[0].len();
        assert!(n >= 3 && rings.iter().all(|r| r.len() == n), "rings must share a size of at least 3");
        let ids: Vec<Vec<usize>> = rings
            .iter()
            .map(|ring| ring.iter().map(|&p| self.vertex(p)).collect())
            .collect();
        for pair in ids.windows(2) {
            let (r0, r1) = (&pair[0], &pair[1]);
            for k in 0..n {
                let k1 = (k + 1) % n;
                self.quad(r0[k], r0[k1], r1[k1], r1[k]);
            }
        }
        if let Some(c) = start_cap {
            let c = self.vertex(c);
            let r = &ids[0];
            for k in 0..n {
                self.triangle(c, r[(k + 1) % n], r[k]);
            }
        }
        if let Some(c) = end_cap {
            let c = self.vertex(c);
            let r = &ids[ids.len() - 1];
            for k in 0..n {
                self.triangle(c, r[k], r[(k + 1) % n]);
            }
        }
    }

    /// Builds the mesh, reversing every face if the winding came out inward.
    pub fn finish(self) -> TriMesh {
        let mesh = TriMesh::new(self.vertices, self.faces).expect("primitive builders emit valid faces");
        if mesh.signed_volume() < 0.0 {
            mesh.map_vertices(|p| *p, true).expect("flip keeps faces valid")
        } else {
            mesh
        }
    }
}

/// Axis-aligned unit cube centered at the origin, 8 vertices, 12 faces.
pub fn unit_cube() -> TriMesh {
    box_mesh(Point3::new(-0.5, -0.5, -0.5), Point3::new(0.5, 0.5, 0.5))
}

pub fn box_mesh(min: Point3<f64>, max: Point3<f64>) -> TriMesh {
    let v = |x: f64, y: f64, z: f64| Point3::new(x, y, z);
    let vertices = vec![
        v(min.x, min.y, min.z),
        v(max.x, min.y, min.z),
        v(max.x, max.y, min.z),
        v(min.x, max.y, min.z),
        v(min.x, min.y, max.z),
        v(max.x, min.y, max.z),
        v(max.x, max.y, max.z),
        v(min.x, max.y, max.z),
    ];
    let faces = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [3, 7, 6],
        [3, 6, 2],
        [0, 4, 7],
        [0, 7, 3],
        [1, 2, 6],
        [1, 6, 5],
    ];
    TriMesh::new(vertices, faces).expect("box with positive extent")
}

/// `n` points on the horizontal ellipse with semi-axes `a` (x) and `b` (z),
/// the k-th at angle `phase + 2πk/n`.
pub fn ellipse_ring(center: &Point3<f64>, a: f64, b: f64, n: usize, phase: f64) -> Vec<Point3<f64>> {
    (0..n)
        .map(|k| {
            let t = phase + std::f64::consts::TAU * k as f64 / n as f64;
            Point3::new(center.x + a * t.cos(), center.y, center.z + b * t.sin())
        })
        .collect()
}

/// Vertical prism over an inscribed ellipse polygon, capped at both ends.
pub fn vertical_prism(base: &Point3<f64>, height: f64, a: f64, b: f64, n: usize, phase: f64) -> TriMesh {
    let top = base + Vector3::y() * height;
    let mut m = MeshBuilder::new(None);
    m.loft(
        &[ellipse_ring(base, a, b, n, phase), ellipse_ring(&top, a, b, n, phase)],
        Some(*base),
        Some(top),
    );
    m.finish()
}

/// Extrudes a convex xy-profile along z from `z0` to `z1`.
pub fn extrude_profile(profile: &[[f64; 2]], z0: f64, z1: f64) -> TriMesh {
    let ring = |z: f64| -> Vec<Point3<f64>> { profile.iter().map(|p| Point3::new(p[0], p[1], z)).collect() };
    let n = profile.len() as f64;
    let cx = profile.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = profile.iter().map(|p| p[1]).sum::<f64>() / n;
    let mut m = MeshBuilder::new(None);
    m.loft(&[ring(z0), ring(z1)], Some(Point3::new(cx, cy, z0)), Some(Point3::new(cx, cy, z1)));
    m.finish()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TubeError {
    #[error("tube path needs at least two points")]
    TooShort,
    #[error("tube path leaves the plane normal to {0:?}")]
    NotPlanar([f64; 3]),
    #[error("tube segment {segment} is too short for its miters")]
    Overlap { segment: usize },
    #[error("tube path folds back on itself at point {0}")]
    Reversal(usize),
}

/// Rings of a tube of radius `r` swept along a planar polyline. Ring
/// vertices sit at angles (2k+1)π/n about the segment frame, so with even
/// `n` a flat face lies in the path's plane on both sides, at apothem
/// r·cos(π/n). Interior rings are mitered on the bisecting plane.
pub fn swept_tube_rings(
    path: &[Point3<f64>],
    r: f64,
    n: usize,
    plane_normal: &Vector3<f64>,
) -> Result<Vec<Vec<Point3<f64>>>, TubeError> {
    if path.len() < 2 {
        return Err(TubeError::TooShort);
    }
    let w = plane_normal.normalize();
    let dirs: Vec<Vector3<f64>> = path.windows(2).map(|s| (s[1] - s[0]).normalize()).collect();
    for d in &dirs {
        if d.dot(&w).abs() > 1e-12 || !d.iter().all(|c| c.is_finite()) {
            return Err(TubeError::NotPlanar([w.x, w.y, w.z]));
        }
    }
    let offsets = |d: &Vector3<f64>| -> Vec<Vector3<f64>> {
        let u = w.cross(d);
        (0..n)
            .map(|k| {
                let phi = std::f64::consts::PI * (2 * k + 1) as f64 / n as f64;
                u * (r * phi.cos()) + w * (r * phi.sin())
            })
            .collect()
    };
    let mut rings = Vec::with_capacity(path.len());
    rings.push(offsets(&dirs[0]).iter().map(|e| path[0] + e).collect::<Vec<_>>());
    for i in 1..path.len() - 1 {
        let (din, dout) = (dirs[i - 1], dirs[i]);
        let m = din + dout;
        if m.norm() < 1e-9 {
            return Err(TubeError::Reversal(i));
        }
        let m = m.normalize();
        let ring = offsets(&din)
            .iter()
            .map(|e| {
                let t = -e.dot(&m) / din.dot(&m);
                path[i] + e + din * t
            })
            .collect();
        rings.push(ring);
    }
    let last = path.len() - 1;
    rings.push(offsets(&dirs[last - 1]).iter().map(|e| path[last] + e).collect());

    for (s, d) in dirs.iter().enumerate() {
        let ok = rings[s]
            .iter()
            .zip(&rings[s + 1])
            .all(|(a, b)| (b - a).dot(d) > 0.05 * r);
        if !ok {
            return Err(TubeError::Overlap { segment: s });
        }
    }
    Ok(rings)
}
