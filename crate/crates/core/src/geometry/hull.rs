use super::{GeometryError, Plane, Polyline};

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain. Returns the hull counter-clockwise without
/// colinear points; fewer than three points means the input was degenerate.
pub fn convex_hull_2d(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

pub fn hull_perimeter_2d(hull: &[[f64; 2]]) -> f64 {
    (0..hull.len())
        .map(|i| {
            let a = hull[i];
            let b = hull[(i + 1) % hull.len()];
            (b[0] - a[0]).hypot(b[1] - a[1])
        })
        .sum()
}

/// Perimeter of the convex hull of the curve's points, computed in the
/// plane's own 2D frame.
pub fn convex_hull_perimeter(curve: &Polyline, plane: &Plane) -> Result<f64, GeometryError> {
    if curve.len() < 3 {
        return Err(GeometryError::TooFewPoints {
            needed: 3,
            got: curve.len(),
        });
    }
    let projected: Vec<[f64; 2]> = curve.points().iter().map(|p| plane.project(p)).collect();
    let hull = convex_hull_2d(&projected);
    if hull.len() < 3 {
        return Err(GeometryError::Colinear { area: 0.0 });
    }
    Ok(hull_perimeter_2d(&hull))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Point3, Vector3};
    use proptest::prelude::*;

    fn flat(points: &[[f64; 2]]) -> Polyline {
        Polyline::new(points.iter().map(|p| Point3::new(p[0], 0.0, p[1])).collect(), true).unwrap()
    }

    fn xz() -> Plane {
        Plane::horizontal(Point3::origin())
    }

    #[test]
    fn square_contour() {
        let sq = flat(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert!((convex_hull_perimeter(&sq, &xz()).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn l_shape_drops_concave_corner() {
        let l = flat(&[
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 0.5],
            [0.5, 0.5],
            [0.5, 1.0],
            [0.0, 1.0],
        ]);
        // concave corner at (0.5, 0.5) is dropped; hull keeps the chamfer
        let expected = 1.0 + 0.5 + 0.5f64.hypot(0.5) + 0.5 + 1.0;
        assert!((convex_hull_perimeter(&l, &xz()).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn notched_square_hull_is_square() {
        // concave contour touching all four corners of the unit square
        let notched = flat(&[
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.6, 1.0],
            [0.5, 0.4],
            [0.4, 1.0],
            [0.0, 1.0],
        ]);
        assert!((convex_hull_perimeter(&notched, &xz()).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn regular_polygon() {
        let n = 256;
        let r = 0.37;
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|k| {
                let a = k as f64 / n as f64 * std::f64::consts::TAU;
                [r * a.cos(), r * a.sin()]
            })
            .collect();
        let expected = 2.0 * n as f64 * r * (std::f64::consts::PI / n as f64).sin();
        assert!((convex_hull_perimeter(&flat(&pts), &xz()).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn colinear_and_short_inputs() {
        let line = Polyline::new(
            vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0), Point3::new(2.0, 0.0, 0.0)],
            false,
        )
        .unwrap();
        assert!(matches!(convex_hull_perimeter(&line, &xz()), Err(GeometryError::Colinear { .. })));
        let two = Polyline::new(vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0)], false).unwrap();
        assert!(matches!(
            convex_hull_perimeter(&two, &xz()),
            Err(GeometryError::TooFewPoints { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn in_plane_rotation_does_not_change_perimeter(
            pts in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 3..60),
            angle in 0.0..std::f64::consts::TAU,
            tilt in (-1.0..1.0f64, 0.2..1.0f64, -1.0..1.0f64),
        ) {
            let plane = Plane::new(Point3::new(0.1, -0.2, 0.3), Vector3::new(tilt.0, tilt.1, tilt.2)).unwrap();
            let (u, v) = plane.basis();
            let lift = |a: f64, b: f64| plane.origin + u * a + v * b;
            let (s, c) = angle.sin_cos();
            let base: Vec<Point3<f64>> = pts.iter().map(|&(a, b)| lift(a, b)).collect();
            let rotated: Vec<Point3<f64>> = pts.iter().map(|&(a, b)| lift(c * a - s * b, s * a + c * b)).collect();
            let (Ok(p0), Ok(p1)) = (Polyline::new(base, false), Polyline::new(rotated, false)) else {
                return Ok(());
            };
            match (convex_hull_perimeter(&p0, &plane), convex_hull_perimeter(&p1, &plane)) {
                (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-9),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
            }
        }
    }
}
