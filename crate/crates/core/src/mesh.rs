//! Indexed triangle meshes, axis-aligned bounding boxes and skeleton joints.
//!
//! Coordinates are meters. The body convention used throughout the crate is
//! y up, subject facing +z, subject's right side toward -x.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Point3, Vector3};
use thiserror::Error;

/// Faces with a smaller area than this are rejected at load time.
pub const MIN_FACE_AREA: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: face {face} has {count} vertices, only triangles are supported")]
    NonTriangulated { line: usize, face: usize, count: usize },
    #[error("line {line}: face {face} references vertex {index}, valid range is 1..={vertex_count}")]
    FaceIndex {
        line: usize,
        face: usize,
        index: i64,
        vertex_count: usize,
    },
    #[error("degenerate faces (area < {MIN_FACE_AREA:e} m^2) at face indices {faces:?}")]
    DegenerateFaces { faces: Vec<usize> },
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFinite { vertex: usize },
    #[error("mesh has no vertices")]
    Empty,
}

/// An indexed triangle surface.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
}

impl TriMesh {
    /// Builds a mesh and checks every invariant: indices in range, finite
    /// coordinates, no face below [`MIN_FACE_AREA`].
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if let Some(vertex) = vertices
            .iter()
            .position(|p| !p.iter().all(|c| c.is_finite()))
        {
            return Err(MeshError::NonFinite { vertex });
        }
        for (face, tri) in faces.iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&i| i >= vertices.len()) {
                return Err(MeshError::FaceIndex {
                    line: 0,
                    face,
                    index: index as i64 + 1,
                    vertex_count: vertices.len(),
                });
            }
        }
        let mesh = TriMesh { vertices, faces };
        let degenerate: Vec<usize> = (0..mesh.faces.len())
            .filter(|&f| mesh.face_area(f) < MIN_FACE_AREA)
            .collect();
        if !degenerate.is_empty() {
            return Err(MeshError::DegenerateFaces { faces: degenerate });
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn triangle(&self, face: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Unit normal following the counter-clockwise winding of the face.
    pub fn face_normal(&self, face: usize) -> Vector3<f64> {
        let [a, b, c] = self.triangle(face);
        (b - a).cross(&(c - a)).normalize()
    }

    /// Signed enclosed volume; positive for a closed, outward-wound surface.
    pub fn signed_volume(&self) -> f64 {
        (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.triangle(f);
                a.coords.dot(&b.coords.cross(&c.coords)) / 6.0
            })
            .sum()
    }

    /// Applies `f` to every vertex. Faces are reversed when `flip_winding`
    /// is set, which keeps normals outward under reflections.
    pub fn map_vertices(
        &self,
        f: impl Fn(&Point3<f64>) -> Point3<f64>,
        flip_winding: bool,
    ) -> Result<TriMesh, MeshError> {
        let vertices = self.vertices.iter().map(f).collect();
        let faces = if flip_winding {
            self.faces.iter().map(|&[a, b, c]| [a, c, b]).collect()
        } else {
            self.faces.clone()
        };
        TriMesh::new(vertices, faces)
    }

    pub fn translated(&self, t: Vector3<f64>) -> TriMesh {
        self.map_vertices(|p| p + t, false)
            .expect("translation keeps mesh invariants")
    }

    /// Concatenates several meshes into one, re-indexing faces.
    pub fn merge(parts: &[TriMesh]) -> TriMesh {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for part in parts {
            let offset = vertices.len();
            vertices.extend_from_slice(&part.vertices);
            faces.extend(
                part.faces
                    .iter()
                    .map(|f| [f[0] + offset, f[1] + offset, f[2] + offset]),
            );
        }
        TriMesh { vertices, faces }
    }

    /// Serializes to the OBJ subset read by [`parse_obj`]. Coordinates use the
    /// shortest representation that parses back to the same `f64`.
    pub fn to_obj_string(&self) -> String {
        let mut out = String::with_capacity(self.vertices.len() * 40 + self.faces.len() * 20);
        for v in &self.vertices {
            let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
        }
        for f in &self.faces {
            let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        out
    }

    pub fn write_obj(&self, path: &Path) -> Result<(), MeshError> {
        std::fs::write(path, self.to_obj_string()).map_err(|source| MeshError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Parses a triangulated Wavefront OBJ. Only `v` and `f` records are used;
/// normals, texture coordinates, groups and materials are skipped.
pub fn parse_obj(text: &str) -> Result<TriMesh, MeshError> {
    let mut vertices = Vec::new();
    // (line number, raw indices)
    let mut raw_faces: Vec<(usize, [i64; 3])> = Vec::new();

    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<&str> = tokens.collect();
                if coords.len() < 3 || coords.len() > 4 {
                    return Err(MeshError::Parse {
                        line: line_no,
                        message: format!("vertex record needs 3 coordinates, got {}", coords.len()),
                    });
                }
                let mut xyz = [0.0; 3];
                for (slot, tok) in xyz.iter_mut().zip(&coords) {
                    *slot = tok.parse::<f64>().map_err(|e| MeshError::Parse {
                        line: line_no,
                        message: format!("bad coordinate {tok:?}: {e}"),
                    })?;
                    if !slot.is_finite() {
                        return Err(MeshError::NonFinite {
                            vertex: vertices.len(),
                        });
                    }
                }
                vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let refs: Vec<&str> = tokens.collect();
                let face = raw_faces.len();
                if refs.len() != 3 {
                    return Err(MeshError::NonTriangulated {
                        line: line_no,
                        face,
                        count: refs.len(),
                    });
                }
                let mut idx = [0i64; 3];
                for (slot, r) in idx.iter_mut().zip(&refs) {
                    let head = r.split('/').next().unwrap_or("");
                    *slot = head.parse::<i64>().map_err(|e| MeshError::Parse {
                        line: line_no,
                        message: format!("bad face index {r:?}: {e}"),
                    })?;
                    // negative indices are relative to the vertices read so far
                    if *slot < 0 {
                        *slot += vertices.len() as i64 + 1;
                        if *slot <= 0 {
                            return Err(MeshError::FaceIndex {
                                line: line_no,
                                face,
                                index: head.parse().unwrap_or(0),
                                vertex_count: vertices.len(),
                            });
                        }
                    }
                }
                raw_faces.push((line_no, idx));
            }
            _ => {}
        }
    }

    let count = vertices.len();
    let mut faces = Vec::with_capacity(raw_faces.len());
    for (face, (line, idx)) in raw_faces.iter().enumerate() {
        let mut tri = [0usize; 3];
        for (slot, &i) in tri.iter_mut().zip(idx) {
            if i < 1 || i as usize > count {
                return Err(MeshError::FaceIndex {
                    line: *line,
                    face,
                    index: i,
                    vertex_count: count,
                });
            }
            *slot = i as usize - 1;
        }
        faces.push(tri);
    }
    TriMesh::new(vertices, faces)
}

pub fn load_mesh(path: &Path) -> Result<TriMesh, MeshError> {
    let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_obj(&text)
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point3<f64>>) -> Option<Aabb> {
        let mut iter = points.into_iter();
        let first = *iter.next()?;
        let (min, max) = iter.fold((first, first), |(lo, hi), p| {
            (
                Point3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z)),
                Point3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z)),
            )
        });
        Some(Aabb { min, max })
    }

    pub fn center(&self) -> Point3<f64> {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn extent(&self) -> Vector3<f64> {
        self.max - self.min
    }

    /// Vertical extent (y).
    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }
}

pub fn compute_aabb(mesh: &TriMesh) -> Result<Aabb, MeshError> {
    Aabb::from_points(mesh.vertices()).ok_or(MeshError::Empty)
}

pub const RIGHT_SHOULDER: &str = "right_shoulder";
pub const LEFT_SHOULDER: &str = "left_shoulder";
pub const RIGHT_ELBOW: &str = "right_elbow";
pub const LEFT_ELBOW: &str = "left_elbow";
pub const RIGHT_WRIST: &str = "right_wrist";
pub const LEFT_WRIST: &str = "left_wrist";
pub const PELVIS: &str = "pelvis";
pub const CHEST: &str = "chest";
pub const WAIST: &str = "waist";

pub const REQUIRED_JOINTS: [&str; 7] = [
    RIGHT_SHOULDER,
    LEFT_SHOULDER,
    RIGHT_ELBOW,
    LEFT_ELBOW,
    RIGHT_WRIST,
    LEFT_WRIST,
    PELVIS,
];

#[derive(Debug, Error)]
pub enum JointError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("joints file is not a JSON object of [x, y, z] arrays: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing required joint {0:?}")]
    Missing(String),
    #[error("joint {0:?} has a non-finite coordinate")]
    NonFinite(String),
    #[error("joint {name:?} at {point:?} lies outside the mesh bounding box")]
    OutsideMesh { name: String, point: [f64; 3] },
}

/// Named skeleton joints. Always contains every name in [`REQUIRED_JOINTS`].
#[derive(Debug, Clone, PartialEq)]
pub struct JointSet {
    joints: BTreeMap<String, Point3<f64>>,
}

impl JointSet {
    pub fn new(joints: BTreeMap<String, Point3<f64>>) -> Result<Self, JointError> {
        for name in REQUIRED_JOINTS {
            if !joints.contains_key(name) {
                return Err(JointError::Missing(name.to_string()));
            }
        }
        if let Some((name, _)) = joints
            .iter()
            .find(|(_, p)| !p.iter().all(|c| c.is_finite()))
        {
            return Err(JointError::NonFinite(name.clone()));
        }
        Ok(JointSet { joints })
    }

    pub fn get(&self, name: &str) -> Option<Point3<f64>> {
        self.joints.get(name).copied()
    }

    /// Lookup for a name that [`JointSet::new`] guarantees to exist.
    pub fn required(&self, name: &str) -> Point3<f64> {
        self.joints[name]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Point3<f64>)> {
        self.joints.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Checks the pairing invariant: every joint inside the mesh box.
    pub fn check_inside(&self, aabb: &Aabb) -> Result<(), JointError> {
        for (name, p) in &self.joints {
            if !aabb.contains(p) {
                return Err(JointError::OutsideMesh {
                    name: name.clone(),
                    point: [p.x, p.y, p.z],
                });
            }
        }
        Ok(())
    }

    pub fn map_points(&self, f: impl Fn(&Point3<f64>) -> Point3<f64>) -> JointSet {
        JointSet {
            joints: self.joints.iter().map(|(k, v)| (k.clone(), f(v))).collect(),
        }
    }

    /// Exchanges every `right_*` joint with its `left_*` counterpart.
    pub fn swap_sides(&self) -> JointSet {
        let joints = self
            .joints
            .iter()
            .map(|(k, v)| {
                let name = if let Some(rest) = k.strip_prefix("right_") {
                    format!("left_{rest}")
                } else if let Some(rest) = k.strip_prefix("left_") {
                    format!("right_{rest}")
                } else {
                    k.clone()
                };
                (name, *v)
            })
            .collect();
        JointSet { joints }
    }

    pub fn to_json(&self) -> String {
        let map: BTreeMap<&str, [f64; 3]> = self
            .joints
            .iter()
            .map(|(k, v)| (k.as_str(), [v.x, v.y, v.z]))
            .collect();
        serde_json::to_string_pretty(&map).expect("joint map serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, JointError> {
        let raw: BTreeMap<String, [f64; 3]> = serde_json::from_str(text)?;
        JointSet::new(
            raw.into_iter()
                .map(|(k, [x, y, z])| (k, Point3::new(x, y, z)))
                .collect(),
        )
    }
}

pub fn load_joints(path: &Path) -> Result<JointSet, JointError> {
    let text = std::fs::read_to_string(path).map_err(|source| JointError::Io {
        path: path.display().to_string(),
        source,
    })?;
    JointSet::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CUBE_OBJ: &str = "\
v -0.5 -0.5 -0.5
v 0.5 -0.5 -0.5
v 0.5 0.5 -0.5
v -0.5 0.5 -0.5
v -0.5 -0.5 0.5
v 0.5 -0.5 0.5
v 0.5 0.5 0.5
v -0.5 0.5 0.5
f 1 3 2
f 1 4 3
f 5 6 7
f 5 7 8
f 1 2 6
f 1 6 5
f 4 8 7
f 4 7 3
f 1 5 8
f 1 8 4
f 2 3 7
f 2 7 6
";

    #[test]
    fn single_triangle() {
        let mesh = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
        assert_eq!(mesh.vertices().len(), 3);
        assert_eq!(mesh.faces(), &[[0, 1, 2]]);
    }

    #[test]
    fn zero_index_is_rejected() {
        let err = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 2 3\n").unwrap_err();
        assert!(matches!(err, MeshError::FaceIndex { face: 0, index: 0, line: 4, .. }), "{err}");
    }

    #[test]
    fn index_past_end_is_rejected() {
        let err = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\nf 1 2 4\n").unwrap_err();
        assert!(matches!(err, MeshError::FaceIndex { face: 1, index: 4, .. }), "{err}");
        assert!(err.to_string().contains("face 1"));
    }

    #[test]
    fn quads_are_rejected() {
        let err = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").unwrap_err();
        assert!(matches!(err, MeshError::NonTriangulated { count: 4, .. }));
    }

    #[test]
    fn degenerate_faces_are_listed() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 2 0 0\nf 1 2 3\nf 1 2 4\nf 2 4 1\n";
        match parse_obj(text).unwrap_err() {
            MeshError::DegenerateFaces { faces } => assert_eq!(faces, vec![1, 2]),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn parse_error_reports_line() {
        let err = parse_obj("v 0 0 0\nv 1 nope 0\n").unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 2, .. }));
    }

    #[test]
    fn slashes_and_extra_records_are_tolerated() {
        let text = "# comment\no body\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nvt 0 0\nf 1/1/1 2/2/1 3//1\n";
        let mesh = parse_obj(text).unwrap();
        assert_eq!(mesh.faces().len(), 1);
    }

    #[test]
    fn cube_counts_and_diagonal() {
        let mesh = parse_obj(CUBE_OBJ).unwrap();
        assert_eq!(mesh.vertices().len(), 8);
        assert_eq!(mesh.faces().len(), 12);
        let aabb = compute_aabb(&mesh).unwrap();
        assert!((aabb.diagonal() - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(aabb.min, Point3::new(-0.5, -0.5, -0.5));
        assert_eq!(aabb.max, Point3::new(0.5, 0.5, 0.5));
        assert!((mesh.signed_volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn aabb_of_repeated_point() {
        let p = Point3::new(0.3, -1.0, 2.0);
        let aabb = Aabb::from_points(&[p, p, p]).unwrap();
        assert_eq!(aabb.min, p);
        assert_eq!(aabb.max, p);
    }

    #[test]
    fn empty_mesh_has_no_aabb() {
        let mesh = TriMesh::new(vec![], vec![]).unwrap();
        assert!(matches!(compute_aabb(&mesh), Err(MeshError::Empty)));
    }

    fn full_joints() -> BTreeMap<String, Point3<f64>> {
        REQUIRED_JOINTS
            .iter()
            .map(|n| (n.to_string(), Point3::new(0.0, 0.0, 0.0)))
            .collect()
    }

    #[test]
    fn joints_with_all_required_names() {
        let text = serde_json::to_string(
            &full_joints()
                .keys()
                .map(|k| (k.clone(), [0.1, 0.2, 0.3]))
                .collect::<BTreeMap<_, _>>(),
        )
        .unwrap();
        let joints = JointSet::from_json(&text).unwrap();
        assert_eq!(joints.required(PELVIS), Point3::new(0.1, 0.2, 0.3));
    }

    #[test]
    fn missing_pelvis_is_named() {
        let mut map = full_joints();
        map.remove(PELVIS);
        let err = JointSet::new(map).unwrap_err();
        assert!(matches!(&err, JointError::Missing(n) if n == "pelvis"));
        assert!(err.to_string().contains("pelvis"));
    }

    #[test]
    fn joint_outside_box_fails_pairing() {
        let mesh = parse_obj(CUBE_OBJ).unwrap();
        let aabb = compute_aabb(&mesh).unwrap();
        let mut map = full_joints();
        map.insert(RIGHT_WRIST.into(), Point3::new(-0.7, 0.0, 0.0));
        let joints = JointSet::new(map).unwrap();
        let err = joints.check_inside(&aabb).unwrap_err();
        assert!(matches!(err, JointError::OutsideMesh { ref name, .. } if name == RIGHT_WRIST));
    }

    #[test]
    fn swap_sides_exchanges_names() {
        let mut map = full_joints();
        map.insert(RIGHT_ELBOW.into(), Point3::new(-1.0, 0.0, 0.0));
        map.insert(LEFT_ELBOW.into(), Point3::new(1.0, 0.0, 0.0));
        let swapped = JointSet::new(map).unwrap().swap_sides();
        assert_eq!(swapped.required(RIGHT_ELBOW).x, 1.0);
        assert_eq!(swapped.required(LEFT_ELBOW).x, -1.0);
    }
}
