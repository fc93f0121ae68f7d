//! Planar polygon utilities: shoelace area, point membership, simplicity.

use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolygonError {
    #[error("polygon needs at least 3 distinct vertices")]
    TooFewPoints,
    #[error("polygon has zero area")]
    ZeroArea,
    #[error("polygon repeats vertex {0}")]
    RepeatedVertex(usize),
    #[error("polygon edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
}

/// Drops a trailing copy of the first vertex.
fn open_ring(points: &[Point2]) -> &[Point2] {
    match points {
        [first, .., last] if points.len() > 3 && first == last => &points[..points.len() - 1],
        _ => points,
    }
}

/// Twice the signed area; positive for counter-clockwise rings.
pub fn signed_area2(points: &[Point2]) -> f64 {
    let pts = open_ring(points);
    let n = pts.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    acc
}

/// Shoelace area of a simple polygon. A closing duplicate vertex is ignored.
pub fn polygon_area(points: &[Point2]) -> Result<f64, PolygonError> {
    if open_ring(points).len() < 3 {
        return Err(PolygonError::TooFewPoints);
    }
    let area = signed_area2(points).abs() / 2.0;
    if area == 0.0 {
        return Err(PolygonError::ZeroArea);
    }
    Ok(area)
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn within(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    if !within(a, b, p) {
        return false;
    }
    let len2 = (b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y);
    orient(a, b, p).abs() <= 1e-12 * len2.max(1e-300)
}

fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && within(c, d, a))
        || (d2 == 0.0 && within(c, d, b))
        || (d3 == 0.0 && within(a, b, c))
        || (d4 == 0.0 && within(a, b, d))
}

/// True when `p` lies on an edge of the ring.
pub fn on_boundary(points: &[Point2], p: Point2) -> bool {
    let pts = open_ring(points);
    let n = pts.len();
    (0..n).any(|i| on_segment(pts[i], pts[(i + 1) % n], p))
}

/// Even-odd membership of the open interior.
pub fn strictly_inside(points: &[Point2], p: Point2) -> bool {
    if on_boundary(points, p) {
        return false;
    }
    crossing_parity(points, p)
}

/// Closed membership: boundary points count as inside.
pub fn contains_closed(points: &[Point2], p: Point2) -> bool {
    on_boundary(points, p) || crossing_parity(points, p)
}

fn crossing_parity(points: &[Point2], p: Point2) -> bool {
    let pts = open_ring(points);
    let n = pts.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (pts[i], pts[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Checks that the ring is a simple polygon with positive area.
pub fn check_simple(points: &[Point2]) -> Result<(), PolygonError> {
    let pts = open_ring(points);
    let n = pts.len();
    if n < 3 {
        return Err(PolygonError::TooFewPoints);
    }
    for i in 0..n {
        if pts[..i].contains(&pts[i]) {
            return Err(PolygonError::RepeatedVertex(i));
        }
    }
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        for j in (i + 1)..n {
            let (c, d) = (pts[j], pts[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Shared vertex is fine; folding back onto the neighbour is not.
                let shared = if j == i + 1 { b } else { a };
                let (other_i, other_j) = if j == i + 1 { (a, d) } else { (b, c) };
                if orient(shared, other_i, other_j) == 0.0
                    && ((on_segment(shared, other_i, other_j) && other_j != shared)
                        || (on_segment(shared, other_j, other_i) && other_i != shared))
                {
                    return Err(PolygonError::SelfIntersecting(i, j));
                }
            } else if segments_intersect(a, b, c, d) {
                return Err(PolygonError::SelfIntersecting(i, j));
            }
        }
    }
    if signed_area2(pts) == 0.0 {
        return Err(PolygonError::ZeroArea);
    }
    Ok(())
}

/// True when every turn of the ring has the same orientation.
pub fn is_convex(points: &[Point2]) -> bool {
    let pts = open_ring(points);
    let n = pts.len();
    if n < 3 {
        return false;
    }
    let mut sign = 0.0;
    for i in 0..n {
        let o = orient(pts[i], pts[(i + 1) % n], pts[(i + 2) % n]);
        if o != 0.0 {
            if sign == 0.0 {
                sign = o;
            } else if (o > 0.0) != (sign > 0.0) {
                return false;
            }
        }
    }
    sign != 0.0
}

pub fn points(coords: &[(f64, f64)]) -> Vec<Point2> {
    coords.iter().map(|&(x, y)| Point2::new(x, y)).collect()
}
