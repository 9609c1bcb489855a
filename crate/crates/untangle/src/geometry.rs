//! Exact planar predicates over integer coordinates.
//!
//! All decisions are made on exact integer arithmetic: coordinates are capped
//! at `MAX_COORD` so every 3-point orientation determinant fits in `i128`.
//! Derived points (segment crossings) are handled through `BigRational` so no
//! comparison is ever rounded.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Coordinate magnitude cap; keeps orientation determinants within i128.
pub const MAX_COORD: i64 = 1 << 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Blue,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Point {
    pub id: u32,
    pub x: i64,
    pub y: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<Color>,
}

impl Point {
    pub fn new(id: u32, x: i64, y: i64) -> Self {
        Point {
            id,
            x,
            y,
            color: None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("point is not exterior to the hull")]
    NotExterior,
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

fn sign128(v: i128) -> i32 {
    match v {
        v if v > 0 => 1,
        v if v < 0 => -1,
        _ => 0,
    }
}

/// Sign of the determinant of (b - a, c - a): +1 counterclockwise, -1
/// clockwise, 0 collinear. Exact for |coord| <= MAX_COORD.
pub fn orient(a: Point, b: Point, c: Point) -> i32 {
    let ux = (b.x - a.x) as i128;
    let uy = (b.y - a.y) as i128;
    let vx = (c.x - a.x) as i128;
    let vy = (c.y - a.y) as i128;
    sign128(ux * vy - uy * vx)
}

/// True iff the open segments ab and cd share exactly one interior point.
/// Segments sharing an endpoint never cross. Assumes general position
/// (no collinear overlap).
pub fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    o1 * o2 < 0 && o3 * o4 < 0
}

/// A line stored as an anchor point plus a gcd-normalized direction with a
/// fixed sign convention (dx > 0, or dx == 0 and dy > 0), so equal lines
/// produce equal canonical keys.
#[derive(Clone, Copy, Debug)]
pub struct OrientedLine {
    pub ax: i64,
    pub ay: i64,
    pub dx: i64,
    pub dy: i64,
}

impl OrientedLine {
    pub fn new(ax: i64, ay: i64, dx: i64, dy: i64) -> Self {
        assert!(dx != 0 || dy != 0, "line direction must be non-zero");
        let g = num_integer::gcd(dx.abs(), dy.abs());
        let (mut dx, mut dy) = (dx / g, dy / g);
        if dx < 0 || (dx == 0 && dy < 0) {
            dx = -dx;
            dy = -dy;
        }
        OrientedLine { ax, ay, dx, dy }
    }

    pub fn through(p: Point, q: Point) -> Self {
        OrientedLine::new(p.x, p.y, q.x - p.x, q.y - p.y)
    }

    /// Side of the line: +1 (left of direction), 0 (on), -1 (right).
    pub fn side(&self, p: Point) -> i32 {
        let rx = (p.x - self.ax) as i128;
        let ry = (p.y - self.ay) as i128;
        sign128(self.dx as i128 * ry - self.dy as i128 * rx)
    }

    /// Canonical key (dx, dy, offset) identifying the line as a point set.
    pub fn key(&self) -> (i64, i64, i128) {
        let c = self.dx as i128 * self.ay as i128 - self.dy as i128 * self.ax as i128;
        (self.dx, self.dy, c)
    }

    /// True iff the segment's endpoints lie strictly on opposite sides.
    pub fn crosses_segment(&self, a: Point, b: Point) -> bool {
        self.side(a) * self.side(b) < 0
    }
}

impl PartialEq for OrientedLine {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}
impl Eq for OrientedLine {}

impl std::hash::Hash for OrientedLine {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

/// Checks whether all points are vertices of their convex hull.
/// Returns the CCW cyclic order (indices into `points`, starting at the
/// lexicographically smallest point) when they are, `None` otherwise.
/// Fewer than 3 points are trivially convex in input order.
pub fn convex_position(points: &[Point]) -> Option<Vec<usize>> {
    if points.len() < 3 {
        return Some((0..points.len()).collect());
    }
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by_key(|&i| (points[i].x, points[i].y));

    // Monotone chain with strict turns; collinear triples reject.
    let build = |iter: &mut dyn Iterator<Item = usize>| -> Option<Vec<usize>> {
        let mut chain: Vec<usize> = Vec::new();
        for i in iter {
            while chain.len() >= 2 {
                let o = orient(
                    points[chain[chain.len() - 2]],
                    points[chain[chain.len() - 1]],
                    points[i],
                );
                if o == 0 {
                    return None;
                }
                if o > 0 {
                    break;
                }
                chain.pop();
            }
            chain.push(i);
        }
        Some(chain)
    };
    let lower = build(&mut idx.iter().copied())?;
    let upper = build(&mut idx.iter().rev().copied())?;
    let mut hull = lower;
    hull.extend(upper.into_iter().skip(1).take(points.len()));
    hull.pop();
    if hull.len() != points.len() {
        return None;
    }
    Some(hull)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HullPosition {
    Inside,
    OnBoundary,
    Outside,
}

/// Locates q relative to a convex polygon given in CCW order.
pub fn locate_in_hull(q: Point, hull: &[Point]) -> HullPosition {
    debug_assert!(hull.len() >= 3);
    let mut on_boundary = false;
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        match orient(a, b, q) {
            o if o < 0 => return HullPosition::Outside,
            0 => {
                // On the supporting line: on the edge iff within its box.
                if q.x >= a.x.min(b.x)
                    && q.x <= a.x.max(b.x)
                    && q.y >= a.y.min(b.y)
                    && q.y <= a.y.max(b.y)
                {
                    on_boundary = true;
                } else {
                    return HullPosition::Outside;
                }
            }
            _ => {}
        }
    }
    if on_boundary {
        HullPosition::OnBoundary
    } else {
        HullPosition::Inside
    }
}

/// The two tangent lines from an exterior point q to a convex polygon in CCW
/// order. Each returned line passes through q and a hull vertex, with the
/// whole hull weakly on one side. Errors when q is inside or on the hull.
pub fn tangents_from_point(
    q: Point,
    hull: &[Point],
) -> Result<(OrientedLine, OrientedLine), GeometryError> {
    if hull.len() < 3 {
        return Err(GeometryError::Degenerate("hull has fewer than 3 vertices".into()));
    }
    if locate_in_hull(q, hull) != HullPosition::Outside {
        return Err(GeometryError::NotExterior);
    }
    let m = hull.len();
    let mut left = None;
    let mut right = None;
    for i in 0..m {
        let v = hull[i];
        let prev = hull[(i + m - 1) % m];
        let next = hull[(i + 1) % m];
        let op = orient(q, v, prev);
        let on = orient(q, v, next);
        if op >= 0 && on >= 0 {
            left = Some(v);
        }
        if op <= 0 && on <= 0 {
            right = Some(v);
        }
    }
    match (left, right) {
        (Some(l), Some(r)) => Ok((OrientedLine::through(q, l), OrientedLine::through(q, r))),
        _ => Err(GeometryError::Degenerate(
            "tangent vertices not found".into(),
        )),
    }
}

/// True iff segment ab intersects the interior of the convex polygon.
/// Relies on general position: no endpoint collinear with a hull edge
/// unless it is that vertex itself.
pub fn segment_meets_hull_interior(a: Point, b: Point, hull: &[Point]) -> bool {
    let vertex_index = |p: Point| hull.iter().position(|&h| h.id == p.id);
    let m = hull.len();
    // A segment leaving a hull vertex enters the interior iff it points into
    // the interior cone at that vertex.
    let enters_at_vertex = |i: usize, other: Point| -> bool {
        let prev = hull[(i + m - 1) % m];
        let v = hull[i];
        let next = hull[(i + 1) % m];
        orient(prev, v, other) > 0 && orient(v, next, other) > 0
    };
    match (vertex_index(a), vertex_index(b)) {
        (Some(i), _) => enters_at_vertex(i, b),
        (_, Some(j)) => enters_at_vertex(j, a),
        (None, None) => {
            if locate_in_hull(a, hull) == HullPosition::Inside
                || locate_in_hull(b, hull) == HullPosition::Inside
            {
                return true;
            }
            (0..m).any(|i| segments_cross(a, b, hull[i], hull[(i + 1) % m]))
        }
    }
}

/// An exact rational point, used for segment crossing points.
#[derive(Clone, Debug, PartialEq)]
pub struct RatPoint {
    pub x: BigRational,
    pub y: BigRational,
}

impl RatPoint {
    pub fn from_point(p: Point) -> Self {
        RatPoint {
            x: BigRational::from(BigInt::from(p.x)),
            y: BigRational::from(BigInt::from(p.y)),
        }
    }

    pub fn sq_dist_to(&self, p: Point) -> BigRational {
        let dx = &self.x - BigRational::from(BigInt::from(p.x));
        let dy = &self.y - BigRational::from(BigInt::from(p.y));
        &dx * &dx + &dy * &dy
    }

    /// Squared distance to the line, scaled by |direction|^2 (a line-local
    /// constant, valid for comparisons against the same line).
    pub fn scaled_sq_dist_to_line(&self, l: &OrientedLine) -> BigRational {
        let rx = &self.x - BigRational::from(BigInt::from(l.ax));
        let ry = &self.y - BigRational::from(BigInt::from(l.ay));
        let c = BigRational::from(BigInt::from(l.dx)) * ry
            - BigRational::from(BigInt::from(l.dy)) * rx;
        &c * &c
    }
}

/// The crossing point of segments ab and cd; the segments must cross.
pub fn crossing_point(a: Point, b: Point, c: Point, d: Point) -> RatPoint {
    // Parameter along ab: t = cross(c-a, d-c) / cross(b-a, d-c).
    let num = (c.x - a.x) as i128 * (d.y - c.y) as i128
        - (c.y - a.y) as i128 * (d.x - c.x) as i128;
    let den = (b.x - a.x) as i128 * (d.y - c.y) as i128
        - (b.y - a.y) as i128 * (d.x - c.x) as i128;
    debug_assert!(den != 0, "crossing_point on parallel segments");
    let t = BigRational::new(BigInt::from(num), BigInt::from(den));
    RatPoint {
        x: BigRational::from(BigInt::from(a.x)) + &t * BigRational::from(BigInt::from(b.x - a.x)),
        y: BigRational::from(BigInt::from(a.y)) + &t * BigRational::from(BigInt::from(b.y - a.y)),
    }
}

/// Compares len(a1 b1) + len(a2 b2) against len(c1 d1) + len(c2 d2) exactly
/// (sums of square roots of integer squared lengths), via repeated squaring
/// of isolated radicals in BigInt arithmetic.
pub fn cmp_length_sums(
    removed: [(Point, Point); 2],
    inserted: [(Point, Point); 2],
) -> std::cmp::Ordering {
    let sq = |(p, q): (Point, Point)| -> BigInt {
        let dx = BigInt::from(p.x - q.x);
        let dy = BigInt::from(p.y - q.y);
        &dx * &dx + &dy * &dy
    };
    cmp_sqrt_sums(sq(removed[0]), sq(removed[1]), sq(inserted[0]), sq(inserted[1]))
}

/// Exact comparison of sqrt(a) + sqrt(b) vs sqrt(c) + sqrt(d) for
/// non-negative integers.
pub fn cmp_sqrt_sums(a: BigInt, b: BigInt, c: BigInt, d: BigInt) -> std::cmp::Ordering {
    use std::cmp::Ordering::*;
    // (sqrt a + sqrt b)^2 = a + b + 2 sqrt(ab); compare s = (a+b)-(c+d)
    // against 2(sqrt(cd) - sqrt(ab)).
    let s = &a + &b - &c - &d;
    let f = &a * &b; // ab
    let e = &c * &d; // cd
    match (s.sign(), e.cmp(&f)) {
        (num_bigint::Sign::NoSign, Equal) => Equal,
        (num_bigint::Sign::Plus, Less) | (num_bigint::Sign::Plus, Equal) => Greater,
        (num_bigint::Sign::NoSign, Less) => Greater,
        (num_bigint::Sign::Minus, Greater) | (num_bigint::Sign::Minus, Equal) => Less,
        (num_bigint::Sign::NoSign, Greater) => Less,
        (num_bigint::Sign::Plus, Greater) => {
            // s > 0, e > f: compare s + 2 sqrt f vs 2 sqrt e; square once:
            // s^2 + 4f + 4 s sqrt f vs 4e  =>  compare 4 s sqrt f vs 4e - s^2 - 4f.
            let rhs = BigInt::from(4) * &e - &s * &s - BigInt::from(4) * &f;
            if rhs.is_negative() {
                return Greater;
            }
            if rhs.is_zero() {
                return if f.is_zero() { Equal } else { Greater };
            }
            // Both sides positive; square again.
            let l2 = BigInt::from(16) * &s * &s * &f;
            let r2 = &rhs * &rhs;
            l2.cmp(&r2)
        }
        (num_bigint::Sign::Minus, Less) => {
            // Symmetric: swap roles.
            cmp_sqrt_sums(c, d, a, b).reverse()
        }
    }
}
