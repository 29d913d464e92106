//! Randomized comparisons of the geometry kernels against brute force.
//! Each check panics on the first mismatch and returns the number of cases.

use anthropometer_core::geometry::{
    convex_hull_2d, hull_perimeter_2d, plane_from_points, polyline_length, ray_mesh_intersections, slice_mesh,
    split_closed_curve, CurvePosition, Plane, Polyline,
};
use anthropometer_core::mesh::TriMesh;
use anthropometer_core::synth::primitives::{box_mesh, vertical_prism};
use anthropometer_core::synth::{generate_body, BodyParams};
use anthropometer_core::dataset::Pose;
use nalgebra::{Point3, Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit_vector(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn random_rotation(rng: &mut impl Rng) -> Rotation3<f64> {
    Rotation3::from_axis_angle(&Unit::new_normalize(unit_vector(rng)), rng.gen_range(0.0..std::f64::consts::TAU))
}

/// A few convex closed parts, each randomly rotated and placed.
fn random_scene(rng: &mut impl Rng) -> TriMesh {
    let parts: Vec<TriMesh> = (0..rng.gen_range(1..4))
        .map(|_| {
            let part = if rng.gen_bool(0.5) {
                box_mesh(Point3::new(-0.2, -0.3, -0.1), Point3::new(0.2, 0.3, 0.1))
            } else {
                let n = rng.gen_range(3..40);
                vertical_prism(
                    &Point3::new(0.0, -0.2, 0.0),
                    0.4,
                    rng.gen_range(0.05..0.3),
                    rng.gen_range(0.05..0.3),
                    n,
                    rng.gen_range(0.0..1.0),
                )
            };
            let rot = random_rotation(rng);
            let shift = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            part.map_vertices(|p| rot * p + shift, false).unwrap()
        })
        .collect();
    TriMesh::merge(&parts)
}

/// Ray parameters of all crossings, by plane intersection and an area test.
/// `None` when some crossing lands too close to an edge to call.
fn brute_ray(mesh: &TriMesh, o: &Point3<f64>, d: &Vector3<f64>) -> Option<Vec<f64>> {
    let mut ts = Vec::new();
    for f in 0..mesh.faces().len() {
        let [a, b, c] = mesh.triangle(f);
        let n = (b - a).cross(&(c - a));
        let denom = n.dot(d);
        if denom.abs() < 1e-14 {
            continue;
        }
        let t = n.dot(&(a - o)) / denom;
        if t <= 1e-9 {
            continue;
        }
        let p = o + d * t;
        let area = n.norm();
        let w = [
            (b - p).cross(&(c - p)).dot(&n) / (area * area),
            (c - p).cross(&(a - p)).dot(&n) / (area * area),
            (a - p).cross(&(b - p)).dot(&n) / (area * area),
        ];
        let lo = w.iter().cloned().fold(f64::INFINITY, f64::min);
        if lo.abs() < 1e-7 {
            return None;
        }
        if lo > 0.0 {
            ts.push(t);
        }
    }
    ts.sort_by(f64::total_cmp);
    Some(ts)
}

pub fn ray_hits_match_brute_force(cases: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    while checked < cases {
        let mesh = random_scene(&mut rng);
        let o = Point3::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let d = unit_vector(&mut rng);
        let Some(expected) = brute_ray(&mesh, &o, &d) else { continue };
        let got: Vec<f64> = ray_mesh_intersections(&mesh, &o, &d).iter().map(|h| h.t).collect();
        assert_eq!(got.len(), expected.len(), "case {checked}: {got:?} vs {expected:?}");
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-9);
        }
        checked += 1;
    }
    checked
}

/// Sum of the per-triangle cut segment lengths.
fn brute_slice_length(mesh: &TriMesh, plane: &Plane) -> f64 {
    let mut total = 0.0;
    for f in 0..mesh.faces().len() {
        let tri = mesh.triangle(f);
        let dist = tri.map(|p| plane.signed_distance(&p));
        let mut pts = Vec::new();
        for i in 0..3 {
            let j = (i + 1) % 3;
            if (dist[i] > 0.0) != (dist[j] > 0.0) {
                let s = dist[i] / (dist[i] - dist[j]);
                pts.push(tri[i] + (tri[j] - tri[i]) * s);
            }
        }
        if pts.len() == 2 {
            total += (pts[1] - pts[0]).norm();
        }
    }
    total
}

pub fn slice_length_matches_per_triangle_sum(cases: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    while checked < cases {
        let mesh = random_scene(&mut rng);
        let origin = Point3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let plane = Plane::new(origin, unit_vector(&mut rng)).unwrap();
        if mesh.vertices().iter().any(|v| plane.signed_distance(v).abs() < 1e-7) {
            continue;
        }
        let curves = slice_mesh(&mesh, &plane);
        let got: f64 = curves.iter().map(Polyline::length).sum();
        assert!((got - brute_slice_length(&mesh, &plane)).abs() < 1e-9, "case {checked}");
        for c in &curves {
            assert!(c.is_closed(), "closed parts give closed curves");
            assert!(c.points().iter().all(|p| plane.signed_distance(p).abs() < 1e-9));
        }
        checked += 1;
    }
    checked
}

fn random_loop(rng: &mut impl Rng) -> Polyline {
    let n = rng.gen_range(3..50);
    let mut angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    let (ra, rb) = (rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0));
    let rot = random_rotation(rng);
    let pts = angles
        .iter()
        .map(|t| rot * Point3::new(ra * t.cos(), rb * t.sin(), 0.0))
        .collect();
    Polyline::new(pts, true).unwrap()
}

fn position(curve: &Polyline, segment: usize, t: f64) -> CurvePosition {
    let (a, b) = curve.segment(segment);
    CurvePosition {
        segment,
        t,
        point: a + (b - a) * t,
        distance: 0.0,
    }
}

/// Arc-length coordinate of a position, by cumulative segment lengths.
fn arc_coordinate(curve: &Polyline, pos: &CurvePosition) -> f64 {
    let before: f64 = (0..pos.segment)
        .map(|i| {
            let (a, b) = curve.segment(i);
            (b - a).norm()
        })
        .sum();
    let (a, b) = curve.segment(pos.segment);
    before + pos.t * (b - a).norm()
}

pub fn split_lengths_match_arc_coordinates(cases: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    while checked < cases {
        let curve = random_loop(&mut rng);
        if curve.len() < 3 {
            continue;
        }
        let segs = curve.segment_count();
        let pa = position(&curve, rng.gen_range(0..segs), rng.gen_range(0.0..1.0));
        let pb = position(&curve, rng.gen_range(0..segs), rng.gen_range(0.0..1.0));
        let total = curve.length();
        let (sa, sb) = (arc_coordinate(&curve, &pa), arc_coordinate(&curve, &pb));
        if (sa - sb).abs() < 1e-6 {
            continue;
        }
        let (fwd, back) = split_closed_curve(&curve, &pa, &pb).unwrap();
        let expected = (sb - sa).rem_euclid(total);
        // snapping to a vertex moves a split point by at most the chain epsilon
        assert!((fwd.length() - expected).abs() < 1e-6, "case {checked}");
        assert!((back.length() - (total - expected)).abs() < 1e-6);
        assert!((fwd.points()[0] - pa.point).norm() < 1e-6);
        assert!((back.points()[0] - pa.point).norm() < 1e-6);
        checked += 1;
    }
    checked
}

pub fn polyline_length_matches_pairwise_sum(cases: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..cases {
        let n = rng.gen_range(2..60);
        let pts: Vec<Point3<f64>> = (0..n)
            .map(|_| Point3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
            .collect();
        let closed = n >= 3 && rng.gen_bool(0.5);
        let mut expected: f64 = pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        if closed {
            expected += (pts[0] - pts[n - 1]).norm();
        }
        let curve = Polyline::new(pts, closed).unwrap();
        assert!((polyline_length(&curve) - expected).abs() < 1e-12 * expected.max(1.0));
    }
    cases
}

/// Hull perimeter from every point pair that has all other points on one side.
fn brute_hull_perimeter(pts: &[[f64; 2]]) -> f64 {
    let mut total = 0.0;
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            if i == j {
                continue;
            }
            let (a, b) = (pts[i], pts[j]);
            let left = pts.iter().enumerate().all(|(k, p)| {
                k == i || k == j || (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) > 0.0
            });
            if left {
                total += (b[0] - a[0]).hypot(b[1] - a[1]);
            }
        }
    }
    total
}

pub fn hull_perimeter_matches_edge_enumeration(cases: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..cases {
        let n = rng.gen_range(3..40);
        let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let got = hull_perimeter_2d(&convex_hull_2d(&pts));
        assert!((got - brute_hull_perimeter(&pts)).abs() < 1e-12, "case {case}");
    }
    cases
}

pub fn synthetic_body_slices_are_closed(cases: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for pose in [Pose::Pose0, Pose::Pose1] {
        let body = generate_body(&BodyParams::reference(pose), 9).unwrap();
        for _ in 0..cases / 2 {
            let y = rng.gen_range(0.01..1.74);
            for c in slice_mesh(&body.mesh, &Plane::horizontal(Point3::new(0.0, y, 0.0))) {
                assert!(c.is_closed(), "open slice at y = {y}");
            }
        }
    }
    cases / 2 * 2
}

pub fn slice_lengths_survive_rigid_motion(cases: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let body = generate_body(&BodyParams::reference(Pose::Pose1), 2).unwrap();
    for _ in 0..cases {
        let rot = random_rotation(&mut rng);
        let shift = Vector3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let moved = body.mesh.map_vertices(|p| rot * p + shift, false).unwrap();
        let pts = [
            Point3::new(rng.gen_range(-0.3..0.3), rng.gen_range(0.2..1.6), rng.gen_range(-0.1..0.1)),
            Point3::new(rng.gen_range(-0.3..0.3), rng.gen_range(0.2..1.6), rng.gen_range(-0.1..0.1)),
            Point3::new(rng.gen_range(-0.3..0.3), rng.gen_range(0.2..1.6), rng.gen_range(-0.1..0.1)),
        ];
        let plane = plane_from_points(&pts[0], &pts[1], &pts[2]).unwrap();
        let moved_plane = plane_from_points(&(rot * pts[0] + shift), &(rot * pts[1] + shift), &(rot * pts[2] + shift)).unwrap();
        let mut a: Vec<f64> = slice_mesh(&body.mesh, &plane).iter().map(Polyline::length).collect();
        let mut b: Vec<f64> = slice_mesh(&moved, &moved_plane).iter().map(Polyline::length).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }
    cases
}
