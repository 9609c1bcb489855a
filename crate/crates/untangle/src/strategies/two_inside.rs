//! Strategy for exactly two non-convex points q, q', both strictly inside
//! the hull of C. Five phases, each clearing one crossing type:
//! 1. CT x CT        — two convex sub-problems, one per side of line qq'.
//! 2. CC x CC        — convex removal over the C-segments.
//! 3. CT x non-central CC (central = crossing the virtual segment qq') —
//!    flip the non-central segment of minimum out-depth with the CT-segment
//!    crossing it nearest one of its endpoints, then repair CT x CT fallout.
//! 4. CT x central CC — flip pairs exposing an empty "ear" triangle at the
//!    crossing, preferring CT pairs; chase any inserted non-central
//!    C-segment that still has crossings.
//! 5. TT x central CC — the segments still crossing have endpoints in convex
//!    position; finish with a scoped convex removal.

use std::collections::BTreeSet;

use num_rational::BigRational;

use crate::engine::Engine;
use crate::geometry::{
    convex_position, segments_cross, OrientedLine, Point, RatPoint,
};
use crate::model::{GeometryClass, Instance, SegKey};
use crate::potentials;

use super::{convex, crossing_param, crossing_rat_point, internal, pre, StrategyError};

pub fn run(eng: &mut Engine) -> Result<(), StrategyError> {
    eng.inst
        .check_geometry_class(GeometryClass::TwoTInside)
        .map_err(|e| pre(format!("two_inside_removal: {e}")))?;
    let (q, q2) = (eng.inst.t_ids[0], eng.inst.t_ids[1]);
    phase1(eng, q, q2)?;
    phase2(eng)?;
    phase3(eng, q, q2)?;
    phase4(eng, q, q2)?;
    phase5(eng)?;
    Ok(())
}

fn is_cc(inst: &Instance, k: SegKey) -> bool {
    !inst.is_t_segment(k)
}

fn is_ct(inst: &Instance, k: SegKey) -> bool {
    inst.is_t_point(k.0) ^ inst.is_t_point(k.1)
}

fn is_tt(inst: &Instance, k: SegKey) -> bool {
    inst.is_t_point(k.0) && inst.is_t_point(k.1)
}

/// A C-segment crossing the virtual segment qq' (present in S or not).
fn is_central(inst: &Instance, k: SegKey, q: u32, q2: u32) -> bool {
    let (a, b) = inst.seg_points(k);
    is_cc(inst, k) && segments_cross(a, b, inst.point(q), inst.point(q2))
}

fn t_end(inst: &Instance, k: SegKey) -> u32 {
    if inst.is_t_point(k.0) {
        k.0
    } else {
        k.1
    }
}

fn c_end(inst: &Instance, k: SegKey) -> u32 {
    if inst.is_t_point(k.0) {
        k.1
    } else {
        k.0
    }
}

/// Phase 1: CT-segments on the same side of line qq' have endpoints in
/// convex position (side points plus q, q' on the line), so each side is a
/// convex sub-problem. Opposite sides cannot cross.
fn phase1(eng: &mut Engine, q: u32, q2: u32) -> Result<(), StrategyError> {
    let line = OrientedLine::through(eng.inst.point(q), eng.inst.point(q2));
    for want in [1, -1] {
        let mut pts: Vec<Point> = eng
            .inst
            .convex_points()
            .into_iter()
            .filter(|&p| line.side(p) == want)
            .collect();
        if pts.len() < 2 {
            continue;
        }
        pts.push(eng.inst.point(q));
        pts.push(eng.inst.point(q2));
        let order_idx = convex_position(&pts).ok_or_else(|| {
            internal("two_inside_removal: side points with q, q' not in convex position")
        })?;
        let order: Vec<u32> = order_idx.iter().map(|&i| pts[i].id).collect();
        convex::removal_scoped(
            eng,
            &order,
            move |inst, k| is_ct(inst, k) && line.side(inst.point(c_end(inst, k))) == want,
            "phase1",
        )?;
    }
    Ok(())
}

fn phase2(eng: &mut Engine) -> Result<(), StrategyError> {
    let order = eng.inst.convex_ids.clone();
    convex::removal_scoped(eng, &order, is_cc, "phase2")?;
    Ok(())
}

/// CT-segments currently crossing `k`.
fn ct_crossers(eng: &Engine, k: SegKey) -> Vec<SegKey> {
    eng.crossers(k)
        .into_iter()
        .filter(|&c| is_ct(&eng.inst, c))
        .collect()
}

fn phase3(eng: &mut Engine, q: u32, q2: u32) -> Result<(), StrategyError> {
    let t = eng.inst.t_segments();
    let mut budget = 32 * (t + 2) * (eng.inst.n() + 2) + 64;
    loop {
        // Non-central C-segment of minimum out-depth crossing a CT-segment.
        let target = eng
            .inst
            .segments
            .keys()
            .copied()
            .filter(|&k| is_cc(&eng.inst, k) && !is_central(&eng.inst, k, q, q2))
            .filter(|&k| !ct_crossers(eng, k).is_empty())
            .min_by_key(|&k| (potentials::out_depth(&eng.inst, k).unwrap_or(u32::MAX), k));
        let Some(pp) = target else { return Ok(()) };
        if budget == 0 {
            return Err(internal("two_inside_removal: phase 3 budget exceeded"));
        }
        budget -= 1;
        // Partner: the CT-segment crossing pp nearest one of its endpoints.
        let near = |ct: SegKey| -> BigRational {
            let u = crossing_param(&eng.inst, pp, pp.0, ct);
            let one = BigRational::from_integer(1.into());
            (&one - &u).min(u)
        };
        let partner = ct_crossers(eng, pp)
            .into_iter()
            .min_by(|&a, &b| near(a).cmp(&near(b)).then(a.cmp(&b)))
            .unwrap();
        let cands = eng.inst.legal_insertions(pp, partner)?;
        let ins = cands
            .first()
            .copied()
            .ok_or_else(|| internal("two_inside_removal: no legal insertion"))?;
        eng.flip((pp, partner), ins, "phase3/main")?;
        // Repair: the inserted CT-segment may now cross other CT-segments.
        let mut s = [ins.0, ins.1]
            .into_iter()
            .find(|&k| is_ct(&eng.inst, k) && !ct_crossers(eng, k).is_empty());
        while let Some(cur) = s {
            if budget == 0 {
                return Err(internal("two_inside_removal: phase 3 repair budget exceeded"));
            }
            budget -= 1;
            let qd = t_end(&eng.inst, cur);
            let s2 = ct_crossers(eng, cur)
                .into_iter()
                .min_by(|&a, &b| {
                    crossing_param(&eng.inst, cur, qd, a)
                        .cmp(&crossing_param(&eng.inst, cur, qd, b))
                        .then(a.cmp(&b))
                })
                .unwrap();
            let cands = eng.inst.legal_insertions(cur, s2)?;
            let ins = cands
                .first()
                .copied()
                .ok_or_else(|| internal("two_inside_removal: no legal insertion"))?;
            eng.flip((cur, s2), ins, "phase3/repair")?;
            s = [ins.0, ins.1]
                .into_iter()
                .find(|&k| is_ct(&eng.inst, k) && !ct_crossers(eng, k).is_empty());
        }
    }
}

fn sign(r: &BigRational) -> i32 {
    let z = BigRational::from_integer(0.into());
    if *r > z {
        1
    } else if *r < z {
        -1
    } else {
        0
    }
}

fn orr(a: &RatPoint, b: &RatPoint, c: &RatPoint) -> i32 {
    let v = (&b.x - &a.x) * (&c.y - &a.y) - (&b.y - &a.y) * (&c.x - &a.x);
    sign(&v)
}

fn strictly_inside(p: Point, a: &RatPoint, b: &RatPoint, c: &RatPoint) -> bool {
    let p = RatPoint::from_point(p);
    let s1 = orr(a, b, &p);
    let s2 = orr(b, c, &p);
    let s3 = orr(c, a, &p);
    s1 != 0 && s1 == s2 && s2 == s3
}

/// Ear test: the triangle spanned by p (a C endpoint of `w`), p'' (the C
/// endpoint of the CT-segment `s_ct`) and their crossing point has no other
/// segment meeting its interior.
fn has_ear(inst: &Instance, s_ct: SegKey, w: SegKey, p: u32, p2: u32) -> bool {
    let c = crossing_rat_point(inst, s_ct, w);
    let a = RatPoint::from_point(inst.point(p));
    let b = RatPoint::from_point(inst.point(p2));
    let c_on_w = crossing_param(inst, w, p, s_ct);
    let c_on_s = crossing_param(inst, s_ct, p2, w);
    for (&k, _) in &inst.segments {
        if k == s_ct || k == w {
            continue;
        }
        let (u, v) = inst.seg_points(k);
        if strictly_inside(u, &a, &b, &c) || strictly_inside(v, &a, &b, &c) {
            return false;
        }
        // Crossing the chord pp'' enters the triangle.
        if segments_cross(u, v, inst.point(p), inst.point(p2)) {
            return false;
        }
        // Crossing w between p and c, or s_ct between p'' and c, enters too.
        if inst.seg_crosses(k, w) && crossing_param(inst, w, p, k) < c_on_w {
            return false;
        }
        if inst.seg_crosses(k, s_ct) && crossing_param(inst, s_ct, p2, k) < c_on_s {
            return false;
        }
    }
    true
}

fn phase4(eng: &mut Engine, q: u32, q2: u32) -> Result<(), StrategyError> {
    let t = eng.inst.t_segments();
    let mut budget = 32 * (t + 2) * (eng.inst.n() + 2) + 64;
    let line = OrientedLine::through(eng.inst.point(q), eng.inst.point(q2));
    loop {
        // Crossing pairs involving a CT-segment, ignoring TT-segments.
        let pairs: Vec<(SegKey, SegKey)> = eng
            .crossing_pairs()
            .into_iter()
            .filter(|&(a, b)| !is_tt(&eng.inst, a) && !is_tt(&eng.inst, b))
            .filter(|&(a, b)| is_ct(&eng.inst, a) || is_ct(&eng.inst, b))
            .collect();
        if pairs.is_empty() {
            return Ok(());
        }
        if budget == 0 {
            return Err(internal("two_inside_removal: phase 4 budget exceeded"));
        }
        budget -= 1;
        // Ear candidates: (priority, pair, labeling).
        let mut pick: Option<(bool, (SegKey, SegKey))> = None;
        'pairs: for &(k1, k2) in &pairs {
            let both_ct = is_ct(&eng.inst, k1) && is_ct(&eng.inst, k2);
            if let Some((was_both, _)) = pick {
                if was_both && !both_ct {
                    continue;
                }
            }
            for (s_ct, w) in [(k1, k2), (k2, k1)] {
                if !is_ct(&eng.inst, s_ct) {
                    continue;
                }
                let p2 = c_end(&eng.inst, s_ct);
                let w_cs: Vec<u32> = [w.0, w.1]
                    .into_iter()
                    .filter(|&id| !eng.inst.is_t_point(id))
                    .collect();
                for p in w_cs {
                    if has_ear(&eng.inst, s_ct, w, p, p2) {
                        match pick {
                            Some((was_both, _)) if was_both || !both_ct => {}
                            _ => pick = Some((both_ct, (k1, k2))),
                        }
                        if both_ct {
                            break 'pairs;
                        }
                        continue 'pairs;
                    }
                }
            }
        }
        let (_, (k1, k2)) = pick.ok_or_else(|| {
            internal("two_inside_removal: no crossing pair exposes an empty ear")
        })?;
        let cands = eng.inst.legal_insertions(k1, k2)?;
        let ins = cands
            .first()
            .copied()
            .ok_or_else(|| internal("two_inside_removal: no legal insertion"))?;
        eng.flip((k1, k2), ins, "phase4/ear")?;
        // Chase any non-central C-segment that still has crossings.
        loop {
            let s = eng
                .inst
                .segments
                .keys()
                .copied()
                .filter(|&k| is_cc(&eng.inst, k) && !is_central(&eng.inst, k, q, q2))
                .find(|&k| !eng.crossers(k).is_empty());
            let Some(s) = s else { break };
            if budget == 0 {
                return Err(internal("two_inside_removal: phase 4 chase budget exceeded"));
            }
            budget -= 1;
            let (sa, sb) = eng.inst.seg_points(s);
            // The T point farther from s goes first in the crosser order.
            let dq = potentials::sq_dist_point_segment(eng.inst.point(q), sa, sb);
            let dq2 = potentials::sq_dist_point_segment(eng.inst.point(q2), sa, sb);
            let far_q = if potentials::cmp_frac(&dq, &dq2) == std::cmp::Ordering::Less {
                q2
            } else {
                q
            };
            let crossers = ct_crossers(eng, s);
            if crossers.is_empty() {
                return Err(internal(
                    "two_inside_removal: non-central C-segment crossed by a non-CT segment",
                ));
            }
            let mut best: Option<(usize, BigRational, SegKey)> = None;
            for c in crossers {
                let pri = if t_end(&eng.inst, c) == far_q { 0 } else { 1 };
                let cp = crossing_rat_point(&eng.inst, s, c);
                let d = cp.scaled_sq_dist_to_line(&line);
                let better = match &best {
                    None => true,
                    Some((bp, bd, bk)) => {
                        pri < *bp
                            || (pri == *bp && d > *bd)
                            || (pri == *bp && d == *bd && c < *bk)
                    }
                };
                if better {
                    best = Some((pri, d, c));
                }
            }
            let (_, _, s2) = best.unwrap();
            let cands = eng.inst.legal_insertions(s, s2)?;
            let ins = cands
                .first()
                .copied()
                .ok_or_else(|| internal("two_inside_removal: no legal insertion"))?;
            eng.flip((s, s2), ins, "phase4/chase")?;
        }
    }
}

/// Phase 5: the remaining crossing segments have all endpoints in convex
/// position; untangle them with a scoped convex removal on that order.
fn phase5(eng: &mut Engine) -> Result<(), StrategyError> {
    let crossing: Vec<SegKey> = eng
        .inst
        .segments
        .keys()
        .copied()
        .filter(|&k| !eng.crossers(k).is_empty())
        .collect();
    if crossing.is_empty() {
        return Ok(());
    }
    let ids: BTreeSet<u32> = crossing.iter().flat_map(|&(a, b)| [a, b]).collect();
    let pts: Vec<Point> = ids.iter().map(|&id| eng.inst.point(id)).collect();
    let order_idx = convex_position(&pts).ok_or_else(|| {
        internal("two_inside_removal: remaining crossing endpoints not in convex position")
    })?;
    let order: Vec<u32> = order_idx.iter().map(|&i| pts[i].id).collect();
    let in_set = move |_: &Instance, k: SegKey| ids.contains(&k.0) && ids.contains(&k.1);
    convex::removal_scoped(eng, &order, in_set, "phase5")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{load_instance, InstanceDoc, Property, Verdict};
    use crate::strategies::{run_strategy, StrategyId};

    fn square_two_inside(segments: Vec<[u32; 2]>, property: Property) -> Instance {
        let pts = vec![
            Point::new(0, 0, 0),
            Point::new(1, 100, 0),
            Point::new(2, 100, 100),
            Point::new(3, 0, 100),
            Point::new(4, 40, 46),
            Point::new(5, 63, 52),
        ];
        load_instance(InstanceDoc {
            points: pts,
            segments,
            property,
            geometry_class: None,
            convex_ids: None,
            t_ids: Some(vec![4, 5]),
        })
        .unwrap()
    }

    #[test]
    fn ct_ct_same_side() {
        let inst = square_two_inside(vec![[2, 4], [3, 5], [0, 1]], Property::Matching);
        let trace = run_strategy(StrategyId::TwoInsideRemoval, &inst, false).unwrap();
        assert_eq!(trace.validate(), Verdict::Valid);
        assert!(trace.events.iter().all(|e| e.tag.starts_with("phase1")));
    }

    #[test]
    fn mixed_crossings() {
        let inst = square_two_inside(
            vec![[2, 4], [3, 5], [0, 2], [1, 3]],
            Property::Multigraph,
        );
        let trace = run_strategy(StrategyId::TwoInsideRemoval, &inst, false).unwrap();
        assert_eq!(trace.validate(), Verdict::Valid);
        assert!(trace.final_state().unwrap().is_crossing_free());
    }

    #[test]
    fn rejects_one_inside() {
        let pts = vec![
            Point::new(0, 0, 0),
            Point::new(1, 100, 0),
            Point::new(2, 100, 100),
            Point::new(3, 0, 100),
            Point::new(4, 40, 55),
        ];
        let inst = load_instance(InstanceDoc {
            points: pts,
            segments: vec![[4, 1], [0, 2]],
            property: Property::Matching,
            geometry_class: None,
            convex_ids: None,
            t_ids: Some(vec![4]),
        })
        .unwrap();
        assert!(matches!(
            run_strategy(StrategyId::TwoInsideRemoval, &inst, false),
            Err(StrategyError::Precondition(_))
        ));
    }
}
