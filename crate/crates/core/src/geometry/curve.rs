use nalgebra::Point3;

use super::{GeometryError, CHAIN_EPSILON};

/// An ordered chain of points. A closed polyline has an implicit segment from
/// the last point back to the first; the first point is never repeated.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Point3<f64>>,
    closed: bool,
}

impl Polyline {
    pub fn new(points: Vec<Point3<f64>>, closed: bool) -> Result<Self, GeometryError> {
        if points.len() < 2 {
            return Err(GeometryError::TooFewPoints {
                needed: 2,
                got: points.len(),
            });
        }
        let n = points.len();
        let pairs = if closed { n } else { n - 1 };
        for i in 0..pairs {
            let j = (i + 1) % n;
            if (points[j] - points[i]).norm() <= CHAIN_EPSILON {
                return Err(GeometryError::RepeatedPoint { index: i, next: j });
            }
        }
        Ok(Polyline { points, closed })
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of segments, counting the closing one.
    pub fn segment_count(&self) -> usize {
        if self.closed {
            self.points.len()
        } else {
            self.points.len() - 1
        }
    }

    pub fn segment(&self, i: usize) -> (Point3<f64>, Point3<f64>) {
        (self.points[i], self.points[(i + 1) % self.points.len()])
    }

    pub fn length(&self) -> f64 {
        polyline_length(self)
    }

    pub fn min_x(&self) -> f64 {
        self.points.iter().map(|p| p.x).fold(f64::INFINITY, f64::min)
    }

    pub fn max_x(&self) -> f64 {
        self.points.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn polyline_length(curve: &Polyline) -> f64 {
    (0..curve.segment_count())
        .map(|i| {
            let (a, b) = curve.segment(i);
            (b - a).norm()
        })
        .sum()
}

/// A location on a polyline: `point = lerp(segment start, segment end, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePosition {
    pub segment: usize,
    pub t: f64,
    pub point: Point3<f64>,
    /// Distance from the queried target to `point`.
    pub distance: f64,
}

/// Closest point of the curve to `target`, if it lies within `tol`.
pub fn locate_on_curve(curve: &Polyline, target: &Point3<f64>, tol: f64) -> Option<CurvePosition> {
    let best = closest_position(curve, target);
    (best.distance <= tol).then_some(best)
}

/// Closest point of the curve to `target` regardless of distance; the first
/// segment wins ties.
pub(crate) fn closest_position(curve: &Polyline, target: &Point3<f64>) -> CurvePosition {
    let mut best: Option<CurvePosition> = None;
    for segment in 0..curve.segment_count() {
        let (a, b) = curve.segment(segment);
        let ab = b - a;
        let t = ((target - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
        let point = a + ab * t;
        let distance = (target - point).norm();
        if best.is_none_or(|b| distance < b.distance) {
            best = Some(CurvePosition {
                segment,
                t,
                point,
                distance,
            });
        }
    }
    best.expect("polyline has at least one segment")
}

/// Splits a closed curve at two positions. Both halves start at `a` and end
/// at `b`; the first runs forward along the curve order, the second backward.
/// Split points closer than the chaining epsilon to a curve vertex snap to it.
pub fn split_closed_curve(
    curve: &Polyline,
    a: &CurvePosition,
    b: &CurvePosition,
) -> Result<(Polyline, Polyline), GeometryError> {
    if !curve.closed {
        return Err(GeometryError::OpenCurve);
    }
    let n = curve.points.len();
    let a = Anchor::snap(curve, a);
    let b = Anchor::snap(curve, b);
    if (a.key == b.key && a.key % 2 == 0) || (a.point - b.point).norm() <= CHAIN_EPSILON {
        return Err(GeometryError::IdenticalSplit);
    }

    let forward = walk(curve, &a, &b, n);
    let mut backward = walk(curve, &b, &a, n);
    backward.reverse();
    Ok((Polyline::new(forward, false)?, Polyline::new(backward, false)?))
}

/// A split point expressed on the cycle: `key = 2 * vertex` for points on a
/// vertex and `2 * segment + 1` for points strictly inside a segment.
#[derive(Debug, Clone, Copy)]
struct Anchor {
    key: usize,
    t: f64,
    point: Point3<f64>,
}

impl Anchor {
    fn snap(curve: &Polyline, pos: &CurvePosition) -> Anchor {
        let n = curve.points.len();
        let (start, end) = curve.segment(pos.segment);
        let seg_len = (end - start).norm();
        if pos.t * seg_len <= CHAIN_EPSILON {
            Anchor { key: 2 * pos.segment, t: 0.0, point: start }
        } else if (1.0 - pos.t) * seg_len <= CHAIN_EPSILON {
            let v = (pos.segment + 1) % n;
            Anchor { key: 2 * v, t: 0.0, point: curve.points[v] }
        } else {
            Anchor { key: 2 * pos.segment + 1, t: pos.t, point: pos.point }
        }
    }

    fn segment(&self) -> usize {
        self.key / 2
    }

    fn is_vertex(&self, v: usize) -> bool {
        self.key % 2 == 0 && self.key / 2 == v
    }

    fn inside_segment(&self, seg: usize) -> bool {
        self.key % 2 == 1 && self.key / 2 == seg
    }
}

/// Points met when travelling forward along the cycle from `from` to `to`.
fn walk(curve: &Polyline, from: &Anchor, to: &Anchor, n: usize) -> Vec<Point3<f64>> {
    let mut out = vec![from.point];
    let mut seg = from.segment();
    // `to` ahead of `from` on the very segment we start on
    let same_segment_ahead = to.inside_segment(seg) && (from.key % 2 == 0 || from.t < to.t);
    if !same_segment_ahead {
        loop {
            let v = (seg + 1) % n;
            if to.is_vertex(v) {
                break;
            }
            out.push(curve.points[v]);
            if to.inside_segment(v) {
                break;
            }
            seg = v;
        }
    }
    out.push(to.point);
    out
}
