use std::collections::HashMap;

use nalgebra::Point3;

use super::{Plane, Polyline};
use crate::mesh::TriMesh;

/// Segment endpoints closer than this are joined into one chain node.
pub const CHAIN_EPSILON: f64 = 1e-7;
/// Vertices this close to the cutting plane are nudged off it.
pub const ON_PLANE_EPSILON: f64 = 1e-9;
/// Size of the nudge, applied along the plane normal.
pub const ON_PLANE_NUDGE: f64 = 2e-9;

/// Intersects the mesh with a plane and chains the cut segments into
/// polylines. Closed loops come out flagged closed; chains that end on a
/// mesh boundary stay open. Output order follows face order.
pub fn slice_mesh(mesh: &TriMesh, plane: &Plane) -> Vec<Polyline> {
    let normal = plane.normal.into_inner();
    let (dist, pos): (Vec<f64>, Vec<Point3<f64>>) = mesh
        .vertices()
        .iter()
        .map(|v| {
            let d = plane.signed_distance(v);
            if d.abs() <= ON_PLANE_EPSILON {
                (d + ON_PLANE_NUDGE, v + normal * ON_PLANE_NUDGE)
            } else {
                (d, *v)
            }
        })
        .unzip();

    let mut welder = Welder::default();
    let mut edge_nodes: HashMap<(usize, usize), usize> = HashMap::new();
    let mut segments: Vec<[usize; 2]> = Vec::new();

    for face in mesh.faces() {
        let above = face.map(|i| dist[i] > 0.0);
        if above[0] == above[1] && above[1] == above[2] {
            continue;
        }
        let mut ends = [0usize; 2];
        let mut count = 0;
        for k in 0..3 {
            let (a, b) = (face[k], face[(k + 1) % 3]);
            if above[k] == above[(k + 1) % 3] {
                continue;
            }
            let key = (a.min(b), a.max(b));
            let node = *edge_nodes.entry(key).or_insert_with(|| {
                let (i, j) = key;
                let s = dist[i] / (dist[i] - dist[j]);
                welder.insert(pos[i] + (pos[j] - pos[i]) * s)
            });
            ends[count] = node;
            count += 1;
        }
        debug_assert_eq!(count, 2, "a triangle straddling a plane crosses it twice");
        if ends[0] != ends[1] {
            segments.push(ends);
        }
    }

    chain(&welder.nodes, &segments)
}

/// Spatial hash that merges points within [`CHAIN_EPSILON`].
#[derive(Default)]
struct Welder {
    nodes: Vec<Point3<f64>>,
    grid: HashMap<[i64; 3], Vec<usize>>,
}

impl Welder {
    fn cell(p: &Point3<f64>) -> [i64; 3] {
        [
            (p.x / CHAIN_EPSILON).floor() as i64,
            (p.y / CHAIN_EPSILON).floor() as i64,
            (p.z / CHAIN_EPSILON).floor() as i64,
        ]
    }

    fn insert(&mut self, p: Point3<f64>) -> usize {
        let c = Self::cell(&p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        if let Some(&id) = ids
                            .iter()
                            .find(|&&id| (self.nodes[id] - p).norm() <= CHAIN_EPSILON)
                        {
                            return id;
                        }
                    }
                }
            }
        }
        let id = self.nodes.len();
        self.nodes.push(p);
        self.grid.entry(c).or_default().push(id);
        id
    }
}

fn chain(nodes: &[Point3<f64>], segments: &[[usize; 2]]) -> Vec<Polyline> {
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (s, seg) in segments.iter().enumerate() {
        incident[seg[0]].push(s);
        incident[seg[1]].push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();

    let follow = |start: usize, first: usize, used: &mut Vec<bool>| -> Polyline {
        let mut path = vec![start];
        let mut node = start;
        let mut seg = Some(first);
        while let Some(s) = seg {
            used[s] = true;
            let [a, b] = segments[s];
            node = if a == node { b } else { a };
            if node == start {
                break;
            }
            path.push(node);
            seg = incident[node].iter().copied().find(|&t| !used[t]);
        }
        let closed = node == start && path.len() > 2;
        let points = path.iter().map(|&i| nodes[i]).collect();
        Polyline::new(points, closed).expect("welded chain nodes are distinct")
    };

    // open chains start at nodes that are not simple pass-throughs
    for n in 0..nodes.len() {
        if incident[n].len() == 2 {
            continue;
        }
        while let Some(first) = incident[n].iter().copied().find(|&s| !used[s]) {
            out.push(follow(n, first, &mut used));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            out.push(follow(segments[s][0], s, &mut used));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::primitives::{unit_cube, vertical_prism};
    use nalgebra::Vector3;

    #[test]
    fn cube_cross_section_is_unit_square() {
        let cube = unit_cube();
        let curves = slice_mesh(&cube, &Plane::horizontal(Point3::origin()));
        assert_eq!(curves.len(), 1);
        assert!(curves[0].is_closed());
        assert!((curves[0].length() - 4.0).abs() < 1e-12);
        for p in curves[0].points() {
            assert!(p.y.abs() < 1e-7);
        }
    }

    #[test]
    fn plane_above_mesh_gives_nothing() {
        let cube = unit_cube();
        let curves = slice_mesh(&cube, &Plane::horizontal(Point3::new(0.0, 2.0, 0.0)));
        assert!(curves.is_empty());
    }

    #[test]
    fn plane_through_cube_face_is_nudged() {
        // y = 0.5 holds the whole top face; the nudge moves those vertices
        // upward so the cut runs 2e-9 below the top
        let cube = unit_cube();
        let curves = slice_mesh(&cube, &Plane::horizontal(Point3::new(0.0, 0.5, 0.0)));
        assert_eq!(curves.len(), 1);
        assert!(curves[0].is_closed());
        // diagonal crossings move by up to the nudge, welded into the corners
        assert!((curves[0].length() - 4.0).abs() < 10.0 * ON_PLANE_NUDGE);
    }

    #[test]
    fn cylinder_section_is_inscribed_polygon() {
        let n = 256;
        let r = 0.3;
        let cyl = vertical_prism(&Point3::new(0.0, -1.0, 0.0), 2.0, r, r, n, 0.0);
        let curves = slice_mesh(&cyl, &Plane::horizontal(Point3::new(0.0, 0.123, 0.0)));
        assert_eq!(curves.len(), 1);
        let expected = 2.0 * n as f64 * r * (std::f64::consts::PI / n as f64).sin();
        assert!((curves[0].length() - expected).abs() < 1e-12);
    }

    #[test]
    fn open_mesh_gives_open_chain() {
        // two triangles of a strip crossing x = 0
        let mesh = TriMesh::new(
            vec![
                Point3::new(-1.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(-1.0, 1.0, 0.0),
                Point3::new(1.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [1, 3, 2]],
        )
        .unwrap();
        let plane = Plane::new(Point3::origin(), Vector3::x()).unwrap();
        let curves = slice_mesh(&mesh, &plane);
        assert_eq!(curves.len(), 1);
        assert!(!curves[0].is_closed());
        assert!((curves[0].length() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unwelded_mesh_chains_by_distance() {
        // the same square strip with duplicated shared vertices
        let mesh = TriMesh::new(
            vec![
                Point3::new(-1.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(-1.0, 1.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(1.0, 1.0, 0.0),
                Point3::new(-1.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        let plane = Plane::new(Point3::origin(), Vector3::x()).unwrap();
        let curves = slice_mesh(&mesh, &plane);
        assert_eq!(curves.len(), 1);
        assert_eq!(curves[0].len(), 3);
    }
}
