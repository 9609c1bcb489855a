//! Exact potential functions used for strategy decisions and invariant
//! monitoring. Everything is recomputed from scratch; no incremental drift.

use std::cmp::Ordering;
use std::collections::HashSet;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{orient, OrientedLine, Point};
use crate::model::{Instance, SegKey};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    LineLambda,
    Depth,
    ProductPhi,
    CrossingDepth,
    IndexEta,
    EtaTSum,
    OutDepth,
    DirectionalEta,
    CrossingCountChi,
    RatioG,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", content = "v")]
#[serde(rename_all = "snake_case")]
pub enum PotentialValue {
    /// Decimal integer (arbitrary precision).
    Int(String),
    /// Exact rational num/den.
    Rational(String, String),
    /// log2 of the value, as a rational accurate to 1e-9 bits.
    Log2(String, String),
}

impl PotentialValue {
    pub fn int(v: impl Into<BigInt>) -> Self {
        PotentialValue::Int(v.into().to_string())
    }

    pub fn rational(r: &BigRational) -> Self {
        PotentialValue::Rational(r.numer().to_string(), r.denom().to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialReport {
    pub kind: PotentialKind,
    pub value: PotentialValue,
    /// Line / segment / state the value was evaluated on.
    pub context: String,
}

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("endpoint {0} is not in C")]
    EndpointNotInC(u32),
    #[error("segment {0:?} is central (its line separates the T points)")]
    Central(SegKey),
    #[error("segment {0:?} has no T endpoint")]
    NotCt(SegKey),
    #[error("T point {0} is not exterior to hull(C)")]
    NotExterior(u32),
    #[error("domain violation: {0}")]
    Domain(String),
}

/// Number of segments of S (with multiplicity) crossed by the line.
pub fn line_lambda(inst: &Instance, line: &OrientedLine) -> u32 {
    inst.segments
        .iter()
        .filter(|(&k, _)| {
            let (a, b) = inst.seg_points(k);
            line.crosses_segment(a, b)
        })
        .map(|(_, &m)| m)
        .sum()
}

/// 0-based position of a point id in the canonical CCW order of C.
pub fn ccw_pos(inst: &Instance, id: u32) -> Result<usize, PotentialError> {
    inst.convex_ids
        .iter()
        .position(|&c| c == id)
        .ok_or(PotentialError::EndpointNotInC(id))
}

/// δ(p_a p_b) = |b − a| over the CCW indexing of C.
pub fn depth(inst: &Instance, k: SegKey) -> Result<u32, PotentialError> {
    let i = ccw_pos(inst, k.0)?;
    let j = ccw_pos(inst, k.1)?;
    Ok(i.abs_diff(j) as u32)
}

/// φ(S) = Π δ(s) over CC-segments, with multiplicity.
pub fn product_phi_raw(inst: &Instance) -> Result<BigUint, PotentialError> {
    let mut phi = BigUint::one();
    for (&k, &m) in &inst.segments {
        if !inst.is_t_segment(k) {
            let d = BigUint::from(depth(inst, k)?);
            for _ in 0..m {
                phi *= &d;
            }
        }
    }
    Ok(phi)
}

pub fn product_phi(inst: &Instance) -> Result<PotentialValue, PotentialError> {
    let phi = product_phi_raw(inst)?;
    if phi.bits() <= 4096 {
        Ok(PotentialValue::Int(phi.to_string()))
    } else {
        // Report log2 as a rational with denominator 2^40 (well within 1e-9).
        let bits = phi.bits();
        let top = (&phi >> (bits - 53)).to_u64().unwrap() as f64;
        let log2 = (bits - 53) as f64 + top.log2();
        let den: u64 = 1 << 40;
        let num = (log2 * den as f64).round() as u128;
        Ok(PotentialValue::Log2(num.to_string(), den.to_string()))
    }
}

/// Keys of segments that cross at least one other segment (a doubled key
/// crosses nothing extra; coincident copies never cross).
pub fn crossing_segment_keys(inst: &Instance) -> HashSet<SegKey> {
    let mut out = HashSet::new();
    for (k1, k2) in inst.crossing_pairs() {
        out.insert(k1);
        out.insert(k2);
    }
    out
}

/// δ×(p_a p_b): points of C strictly between the endpoints in CCW index that
/// are endpoints of some crossing segment.
pub fn crossing_depth(inst: &Instance, k: SegKey) -> Result<u32, PotentialError> {
    let i = ccw_pos(inst, k.0)?;
    let j = ccw_pos(inst, k.1)?;
    let (lo, hi) = (i.min(j), i.max(j));
    let crossers = crossing_segment_keys(inst);
    let hot: HashSet<u32> = crossers.iter().flat_map(|&(a, b)| [a, b]).collect();
    Ok(inst.convex_ids[lo + 1..hi]
        .iter()
        .filter(|id| hot.contains(id))
        .count() as u32)
}

/// Ranks of all points sorted vertically from top to bottom. Equal-y ties
/// (possible in general position) break by x, then id, deterministically.
pub fn vertical_ranks(inst: &Instance) -> Vec<usize> {
    let mut order: Vec<usize> = (0..inst.points.len()).collect();
    order.sort_by_key(|&i| {
        let p = inst.points[i];
        (std::cmp::Reverse(p.y), p.x, p.id)
    });
    let mut rank = vec![0usize; inst.points.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    rank
}

/// η(p_i p_j) = |i − j| over the vertical ranks.
pub fn index_eta(inst: &Instance, k: SegKey) -> u32 {
    let rank = vertical_ranks(inst);
    rank[k.0 as usize].abs_diff(rank[k.1 as usize]) as u32
}

/// η_T(S): sum of η over T-segments, with multiplicity.
pub fn eta_t_sum(inst: &Instance) -> u64 {
    let rank = vertical_ranks(inst);
    inst.segments
        .iter()
        .filter(|(&k, _)| inst.is_t_segment(k))
        .map(|(&k, &m)| rank[k.0 as usize].abs_diff(rank[k.1 as usize]) as u64 * m as u64)
        .sum()
}

/// δ′(pp′): points of C strictly inside the halfplane bounded by line pp′
/// that does not contain the T points. Errors if line pp′ separates T.
pub fn out_depth(inst: &Instance, k: SegKey) -> Result<u32, PotentialError> {
    ccw_pos(inst, k.0)?;
    ccw_pos(inst, k.1)?;
    let (p, p2) = inst.seg_points(k);
    let line = OrientedLine::through(p, p2);
    let mut t_side = 0i32;
    for &tid in &inst.t_ids {
        let s = line.side(inst.point(tid));
        if s == 0 {
            return Err(PotentialError::Domain(format!("T point {tid} on line")));
        }
        if t_side == 0 {
            t_side = s;
        } else if t_side != s {
            return Err(PotentialError::Central(k));
        }
    }
    if t_side == 0 {
        return Err(PotentialError::Domain("no T points".into()));
    }
    Ok(inst
        .convex_ids
        .iter()
        .filter(|&&id| line.side(inst.point(id)) == -t_side)
        .count() as u32)
}

/// Exact squared distance from q to segment [a, b], as a (num, den) pair of
/// non-negative big integers.
pub(crate) fn sq_dist_point_segment(q: Point, a: Point, b: Point) -> (BigInt, BigInt) {
    let big = |v: i64| BigInt::from(v);
    let (abx, aby) = (big(b.x - a.x), big(b.y - a.y));
    let (aqx, aqy) = (big(q.x - a.x), big(q.y - a.y));
    let len2 = &abx * &abx + &aby * &aby;
    let dot = &abx * &aqx + &aby * &aqy;
    if dot <= BigInt::zero() {
        return (&aqx * &aqx + &aqy * &aqy, BigInt::one());
    }
    if dot >= len2 {
        let (bqx, bqy) = (big(q.x - b.x), big(q.y - b.y));
        return (&bqx * &bqx + &bqy * &bqy, BigInt::one());
    }
    let cross = &abx * &aqy - &aby * &aqx;
    (&cross * &cross, len2)
}

pub(crate) fn cmp_frac(a: &(BigInt, BigInt), b: &(BigInt, BigInt)) -> Ordering {
    (&a.0 * &b.1).cmp(&(&b.0 * &a.1))
}

/// Direction v(q): the inward normal of the hull edge of C closest to q,
/// restricted to edges whose supporting line has q strictly outside (at
/// least one such edge exists for exterior q). Returned gcd-reduced.
pub fn v_of_q(inst: &Instance, q_id: u32) -> Result<(i64, i64), PotentialError> {
    let hull = inst.convex_points();
    if hull.len() < 3 {
        return Err(PotentialError::Domain("hull too small".into()));
    }
    let q = inst.point(q_id);
    let m = hull.len();
    let mut best: Option<(usize, (BigInt, BigInt))> = None;
    for i in 0..m {
        let (a, b) = (hull[i], hull[(i + 1) % m]);
        // CCW hull: interior is to the left; q strictly outside the line.
        if orient(a, b, q) >= 0 {
            continue;
        }
        let d = sq_dist_point_segment(q, a, b);
        let better = match &best {
            None => true,
            Some((_, bd)) => cmp_frac(&d, bd) == Ordering::Less,
        };
        if better {
            best = Some((i, d));
        }
    }
    let (i, _) = best.ok_or(PotentialError::NotExterior(q_id))?;
    let (a, b) = (hull[i], hull[(i + 1) % m]);
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    // Inward (left) normal of the directed edge a->b.
    let (mut vx, mut vy) = (-dy, dx);
    let g = num_integer::gcd(vx.abs(), vy.abs());
    vx /= g;
    vy /= g;
    debug_assert!(inst.convex_ids.iter().all(|&cid| {
        let p = inst.point(cid);
        (vx as i128) * (p.x as i128 - q.x as i128) + (vy as i128) * (p.y as i128 - q.y as i128) > 0
    }));
    Ok((vx, vy))
}

/// Number of points p ∈ C with v(q)·p < v(q)·p_x, for a CT-segment p_x q.
pub fn directional_eta(inst: &Instance, k: SegKey) -> Result<u32, PotentialError> {
    let (c_id, t_id) = if inst.is_t_point(k.0) && !inst.is_t_point(k.1) {
        (k.1, k.0)
    } else if inst.is_t_point(k.1) && !inst.is_t_point(k.0) {
        (k.0, k.1)
    } else {
        return Err(PotentialError::NotCt(k));
    };
    let (vx, vy) = v_of_q(inst, t_id)?;
    let dot = |p: Point| (vx as i128) * (p.x as i128) + (vy as i128) * (p.y as i128);
    let px = dot(inst.point(c_id));
    Ok(inst
        .convex_ids
        .iter()
        .filter(|&&id| dot(inst.point(id)) < px)
        .count() as u32)
}

/// g(x, y) = (1 + x + y) / ((1 + x)(1 + y)) for x, y ≥ 1; range (0, 3/4].
pub fn ratio_g(x: &BigRational, y: &BigRational) -> Result<BigRational, PotentialError> {
    let one = BigRational::one();
    if x < &one || y < &one {
        return Err(PotentialError::Domain(format!("g needs x,y >= 1, got {x}, {y}")));
    }
    let num = &one + x + y;
    let den = (&one + x) * (&one + y);
    Ok(num / den)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChiScope {
    /// Crossings between non-central CC-segments and CT-segments.
    NonCentralCcCt,
    /// Crossings of central CC-segments with CT-segments, plus CT×CT.
    CentralCcCtPlusCtCt,
}

fn is_central(inst: &Instance, k: SegKey) -> bool {
    // A CC-segment is central when it crosses the (virtual) segment qq'
    // joining the two T points.
    if inst.t_ids.len() != 2 {
        return false;
    }
    let (a, b) = inst.seg_points(k);
    let q = inst.point(inst.t_ids[0]);
    let q2 = inst.point(inst.t_ids[1]);
    crate::geometry::segments_cross(a, b, q, q2)
}

/// χ: exact crossing count in the given scope, with multiplicity.
pub fn crossing_count_chi(inst: &Instance, scope: ChiScope) -> u32 {
    let keys: Vec<(SegKey, u32)> = inst.segments.iter().map(|(&k, &m)| (k, m)).collect();
    let kind = |k: SegKey| -> u8 {
        let t = inst.is_t_point(k.0) as u8 + inst.is_t_point(k.1) as u8;
        t
    };
    let mut chi = 0u32;
    for i in 0..keys.len() {
        for j in i + 1..keys.len() {
            let (k1, m1) = keys[i];
            let (k2, m2) = keys[j];
            if !inst.seg_crosses(k1, k2) {
                continue;
            }
            let (t1, t2) = (kind(k1), kind(k2));
            let in_scope = match scope {
                ChiScope::NonCentralCcCt => {
                    (t1 == 0 && t2 == 1 && !is_central(inst, k1))
                        || (t2 == 0 && t1 == 1 && !is_central(inst, k2))
                }
                ChiScope::CentralCcCtPlusCtCt => {
                    (t1 == 0 && t2 == 1 && is_central(inst, k1))
                        || (t2 == 0 && t1 == 1 && is_central(inst, k2))
                        || (t1 == 1 && t2 == 1)
                }
            };
            if in_scope {
                chi += m1 * m2;
            }
        }
    }
    chi
}

/// Standard per-state snapshot embedded in traces when snapshots are on.
pub fn snapshot(inst: &Instance) -> Vec<PotentialReport> {
    let mut out = Vec::new();
    out.push(PotentialReport {
        kind: PotentialKind::CrossingCountChi,
        value: PotentialValue::int(inst.crossing_pairs().len() as i64),
        context: "all crossing pairs".into(),
    });
    if let Ok(v) = product_phi(inst) {
        out.push(PotentialReport {
            kind: PotentialKind::ProductPhi,
            value: v,
            context: "CC-segments".into(),
        });
    }
    if !inst.t_ids.is_empty() {
        out.push(PotentialReport {
            kind: PotentialKind::EtaTSum,
            value: PotentialValue::int(eta_t_sum(inst) as i64),
            context: "T-segments, vertical order".into(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_instance, InstanceDoc, Property};

    fn inst(points: Vec<(i64, i64)>, segs: Vec<[u32; 2]>, t: Vec<u32>) -> Instance {
        let pts = points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| Point::new(i as u32, x, y))
            .collect();
        load_instance(InstanceDoc {
            points: pts,
            segments: segs,
            property: Property::Multigraph,
            geometry_class: None,
            convex_ids: None,
            t_ids: Some(t),
        })
        .unwrap()
    }

    fn regular_polygon(n: usize, r: i64) -> Vec<(i64, i64)> {
        (0..n)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64 + 0.17;
                ((r as f64 * a.cos()).round() as i64, (r as f64 * a.sin()).round() as i64)
            })
            .collect()
    }

    #[test]
    fn lambda_counts() {
        // Square with two crossing diagonals.
        let inst = inst(
            vec![(0, 0), (10, 0), (10, 10), (0, 10)],
            vec![[0, 2], [1, 3]],
            vec![],
        );
        // Vertical line x = 5 crosses both diagonals.
        let l = OrientedLine::through(Point::new(90, 5, -100), Point::new(91, 5, 100));
        assert_eq!(line_lambda(&inst, &l), 2);
        // A line far to the right crosses nothing.
        let l0 = OrientedLine::through(Point::new(92, 50, -100), Point::new(93, 50, 100));
        assert_eq!(line_lambda(&inst, &l0), 0);
    }

    #[test]
    fn depth_additivity() {
        let pts = regular_polygon(14, 1000);
        let inst = inst(pts, vec![[0, 6]], vec![]);
        // CCW positions: id i sits at position pos(i); depth is index distance.
        let at = |pos: usize| inst.convex_ids[pos];
        let d = |i: usize, j: usize| depth(&inst, crate::model::seg(at(i), at(j))).unwrap();
        for a in 0..14 {
            for c in a + 1..14 {
                for b in c + 1..14 {
                    assert_eq!(d(a, b), d(a, c) + d(c, b));
                }
            }
        }
    }

    #[test]
    fn depth_on_fourteen_gon() {
        let pts = regular_polygon(14, 1000);
        let inst = inst(pts, vec![[0, 6]], vec![]);
        // p1..p14 labels are CCW positions; p1p7 spans 6 index steps.
        let i = inst.convex_ids[0];
        let j = inst.convex_ids[6];
        assert_eq!(depth(&inst, crate::model::seg(i, j)).unwrap(), 6);
    }

    #[test]
    fn phi_products() {
        let pts = regular_polygon(8, 1000);
        let ids: Vec<u32> = (0..8).collect();
        let c = |pos: usize| ids[pos];
        // depths 3 and 4 via CCW positions.
        let inst = inst(pts, vec![[c(0), c(3)], [c(1), c(5)]], vec![]);
        let d0 = depth(&inst, crate::model::seg(0, 3)).unwrap();
        let d1 = depth(&inst, crate::model::seg(1, 5)).unwrap();
        assert_eq!(
            product_phi_raw(&inst).unwrap(),
            BigUint::from(d0 as u64 * d1 as u64)
        );
    }

    #[test]
    fn crossing_depth_zero_when_crossing_free() {
        let pts = regular_polygon(8, 1000);
        let inst = inst(pts, vec![[0, 1], [2, 3], [4, 7]], vec![]);
        assert!(inst.is_crossing_free());
        for &k in inst.segments.keys() {
            assert_eq!(crossing_depth(&inst, k).unwrap(), 0);
        }
    }

    #[test]
    fn eta_extremes() {
        let inst = inst(
            vec![(0, 0), (20, 10), (15, 20), (1, 30)],
            vec![[0, 3], [1, 2]],
            vec![],
        );
        assert_eq!(index_eta(&inst, (0, 3)), 3);
        assert_eq!(index_eta(&inst, (1, 2)), 1);
    }

    #[test]
    fn ratio_g_values() {
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert_eq!(ratio_g(&r(1, 1), &r(1, 1)).unwrap(), r(3, 4));
        assert_eq!(ratio_g(&r(2, 1), &r(1, 1)).unwrap(), r(2, 3));
        assert!(ratio_g(&r(1, 2), &r(1, 1)).is_err());
        // Monotone decreasing in each argument on a small grid.
        for xi in 1..6i64 {
            for yi in 1..6i64 {
                let g = ratio_g(&r(xi, 1), &r(yi, 1)).unwrap();
                assert!(g <= r(3, 4));
                assert!(ratio_g(&r(xi + 1, 1), &r(yi, 1)).unwrap() < g);
                assert!(ratio_g(&r(xi, 1), &r(yi + 1, 1)).unwrap() < g);
            }
        }
    }

    #[test]
    fn directional_eta_extremes() {
        // Irregular convex hexagon (no two vertices tie against an edge normal).
        let mut pts = vec![(0, 0), (900, -310), (1607, 93), (1702, 811), (803, 1207), (-107, 703)];
        pts.push((4000, 50)); // q, far right
        let inst = inst(pts, vec![[6, 0]], vec![6]);
        let (vx, vy) = v_of_q(&inst, 6).unwrap();
        // v points from q toward C, i.e. leftward.
        assert!(vx < 0 || (vx == 0 && vy != 0));
        let dot = |id: u32| {
            let p = inst.point(id);
            vx as i128 * p.x as i128 + vy as i128 * p.y as i128
        };
        let first = *inst
            .convex_ids
            .iter()
            .min_by_key(|&&id| dot(id))
            .unwrap();
        let last = *inst
            .convex_ids
            .iter()
            .max_by_key(|&&id| dot(id))
            .unwrap();
        assert_eq!(directional_eta(&inst, crate::model::seg(6, first)).unwrap(), 0);
        assert_eq!(
            directional_eta(&inst, crate::model::seg(6, last)).unwrap(),
            (inst.convex_ids.len() - 1) as u32
        );
    }

    #[test]
    fn out_depth_halfplane() {
        let pts = vec![(0, 0), (10, 1), (9, 10), (-1, 9), (5, 5)];
        let inst = inst(pts, vec![[0, 1]], vec![4]);
        // Line p0p1 has all of C weakly on the T side; out-depth 0.
        assert_eq!(out_depth(&inst, (0, 1)).unwrap(), 0);
    }

    #[test]
    fn chi_scopes() {
        // Two interior T points with one CT x CT crossing.
        let mut pts = regular_polygon(6, 1000);
        pts.push((-100, 10));
        pts.push((100, -10));
        let inst = inst(pts, vec![[6, 0], [7, 3]], vec![6, 7]);
        let total = inst.crossing_pairs().len() as u32;
        assert_eq!(
            crossing_count_chi(&inst, ChiScope::CentralCcCtPlusCtCt),
            total
        );
        assert_eq!(crossing_count_chi(&inst, ChiScope::NonCentralCcCt), 0);
    }
}
