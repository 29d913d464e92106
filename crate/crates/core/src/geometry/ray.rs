use nalgebra::{Point3, Vector3};

use crate::mesh::TriMesh;

/// Hits at or below this ray parameter are discarded (the origin itself).
const MIN_T: f64 = 1e-9;
/// Hits closer than this along the ray are one crossing (shared edges).
const MERGE_T: f64 = 1e-9;
/// Slack on barycentric coordinates so that edge and vertex hits are kept.
const BARY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub t: f64,
    pub point: Point3<f64>,
    pub face: usize,
}

/// Moller-Trumbore test of one triangle. Returns the ray parameter.
fn intersect_triangle(origin: &Point3<f64>, dir: &Vector3<f64>, tri: &[Point3<f64>; 3]) -> Option<f64> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - tri[0];
    let u = s.dot(&p) * inv;
    if u < -BARY_SLACK || u > 1.0 + BARY_SLACK {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < -BARY_SLACK || u + v > 1.0 + BARY_SLACK {
        return None;
    }
    Some(e2.dot(&q) * inv)
}

/// All crossings of the ray `origin + t * dir` (t > 1e-9) with the mesh,
/// ascending in `t`. Crossings within 1e-9 of each other in `t` are merged,
/// keeping the one from the lowest face index.
pub fn ray_mesh_intersections(mesh: &TriMesh, origin: &Point3<f64>, dir: &Vector3<f64>) -> Vec<RayHit> {
    let mut hits: Vec<RayHit> = (0..mesh.faces().len())
        .filter_map(|face| {
            let t = intersect_triangle(origin, dir, &mesh.triangle(face))?;
            (t > MIN_T).then(|| RayHit {
                t,
                point: origin + dir * t,
                face,
            })
        })
        .collect();
    hits.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.face.cmp(&b.face)));
    let mut merged: Vec<RayHit> = Vec::with_capacity(hits.len());
    for hit in hits {
        match merged.last() {
            Some(last) if hit.t - last.t <= MERGE_T => {}
            _ => merged.push(hit),
        }
    }
    merged
}
