//! Liberating the supporting line of a matching segment pq: after at most
//! |W|+2 flips, no segment crosses line(pq), where W is the set of segments
//! crossing the line. Works by first clearing crossings inside W with
//! same-side reconnections (each flip retires two W members), then consuming
//! pq and the rest of W with a chain of carrier flips. Inserted segments
//! never cross the line, and no flip can raise a line's crossing count, so
//! the line stays free during cleanup.

use std::collections::BTreeSet;

use crate::engine::Engine;
use crate::geometry::{segments_cross, OrientedLine, Point};
use crate::model::{seg, Instance, Property, SegKey};

use super::{crossing_param, internal, pre, StrategyError};

/// Endpoints of `k` split by side of `line` (positive first). Errors if an
/// endpoint lies on the line.
fn split_sides(
    inst: &Instance,
    line: &OrientedLine,
    k: SegKey,
) -> Result<(u32, u32), StrategyError> {
    let (a, b) = inst.seg_points(k);
    match (line.side(a), line.side(b)) {
        (1, -1) => Ok((k.0, k.1)),
        (-1, 1) => Ok((k.1, k.0)),
        _ => Err(internal(format!("segment {k:?} does not straddle the line"))),
    }
}

/// Frees the supporting line of `pq` from all `filter`-accepted crossers.
/// Returns the number of flips performed. Afterwards no accepted segment
/// crosses the line; crossings that avoid the line may remain.
pub(crate) fn liberate<F>(
    eng: &mut Engine,
    pq: SegKey,
    filter: F,
    tag: &str,
) -> Result<usize, StrategyError>
where
    F: Fn(&Instance, SegKey) -> bool,
{
    let (p, q) = eng.inst.seg_points(pq);
    let line = OrientedLine::through(p, q);
    let crosses_line = |inst: &Instance, k: SegKey| {
        let (a, b) = inst.seg_points(k);
        line.crosses_segment(a, b)
    };
    let w_keys = |eng: &Engine| -> Vec<SegKey> {
        eng.inst
            .segments
            .keys()
            .copied()
            .filter(|&k| k != pq && filter(&eng.inst, k) && crosses_line(&eng.inst, k))
            .collect()
    };
    let mut flips = 0usize;

    // Stage 1: clear crossings among W members with same-side pairings; the
    // two inserted segments leave the line alone, so W shrinks by two.
    loop {
        let w = w_keys(eng);
        let ws: BTreeSet<SegKey> = w.iter().copied().collect();
        let Some((k1, k2)) = w
            .iter()
            .copied()
            .find_map(|k| {
                eng.crossers(k)
                    .into_iter()
                    .find(|c| *c > k && ws.contains(c))
                    .map(|c| (k, c))
            })
        else {
            break;
        };
        let (a_pos, a_neg) = split_sides(&eng.inst, &line, k1)?;
        let (b_pos, b_neg) = split_sides(&eng.inst, &line, k2)?;
        eng.flip((k1, k2), (seg(a_pos, b_pos), seg(a_neg, b_neg)), format!("{tag}/pre"))?;
        flips += 1;
    }

    // Stage 2: every remaining W member must cross the segment pq itself.
    let mut w = w_keys(eng);
    for &k in &w {
        if !eng.inst.seg_crosses(pq, k) {
            return Err(internal(format!(
                "liberate: {k:?} crosses the line of {pq:?} but not the segment"
            )));
        }
    }
    if w.is_empty() {
        return Ok(flips);
    }
    w.sort_by(|&a, &b| {
        crossing_param(&eng.inst, pq, pq.0, a)
            .cmp(&crossing_param(&eng.inst, pq, pq.0, b))
            .then(a.cmp(&b))
    });

    if w.len() == 1 {
        let cands = eng.inst.legal_insertions(pq, w[0])?;
        let ins = cands
            .first()
            .copied()
            .ok_or_else(|| internal("liberate: no legal insertion for the lone crosser"))?;
        eng.flip((pq, w[0]), ins, format!("{tag}/single"))?;
        return Ok(flips + 1);
    }

    // First chain flip: consume pq plus the first or last W member so that
    // one inserted segment (the carrier) crosses every other W member, and
    // the other inserted segment hugs an endpoint of pq and leaves the line.
    let (first, last) = (w[0], w[w.len() - 1]);
    let (f_pos, f_neg) = split_sides(&eng.inst, &line, first)?;
    let (l_pos, l_neg) = split_sides(&eng.inst, &line, last)?;
    let candidates = [
        (pq.0, l_pos, last),
        (pq.1, f_pos, first),
        (pq.1, f_neg, first),
        (pq.0, l_neg, last),
    ];
    let crosses_all = |eng: &Engine, a: Point, b: Point, skip: SegKey, rest: &[SegKey]| {
        rest.iter().all(|&k| {
            if k == skip {
                return true;
            }
            let (c, d) = eng.inst.seg_points(k);
            segments_cross(a, b, c, d)
        })
    };
    let mut chosen = None;
    for (anchor, f_id, consumed) in candidates {
        let (a, b) = (eng.inst.point(anchor), eng.inst.point(f_id));
        if crosses_all(eng, a, b, consumed, &w) {
            chosen = Some((anchor, f_id, consumed));
            break;
        }
    }
    let (anchor, f_id, consumed) = chosen.ok_or_else(|| {
        internal("liberate: no endpoint segment crosses all remaining line crossers")
    })?;
    let other_anchor = if anchor == pq.0 { pq.1 } else { pq.0 };
    let other_f = if consumed.0 == f_id { consumed.1 } else { consumed.0 };
    let mut carrier = seg(anchor, f_id);
    eng.flip(
        (pq, consumed),
        (carrier, seg(other_anchor, other_f)),
        format!("{tag}/chain"),
    )?;
    flips += 1;
    let mut remaining: BTreeSet<SegKey> = w.into_iter().filter(|&k| k != consumed).collect();
    let mut u_id = anchor;

    // Chain: flip the carrier with the member nearest its moving end; retire
    // the moving-end segment off the line and keep a carrier that still
    // crosses everything left.
    while !remaining.is_empty() {
        let next = remaining
            .iter()
            .copied()
            .max_by(|&a, &b| {
                crossing_param(&eng.inst, carrier, f_id, a)
                    .cmp(&crossing_param(&eng.inst, carrier, f_id, b))
                    .then(b.cmp(&a))
            })
            .unwrap();
        remaining.remove(&next);
        let rest: Vec<SegKey> = remaining.iter().copied().collect();
        let mut choice = None;
        let mut options = [(next.0, next.1), (next.1, next.0)];
        options.sort_unstable();
        for (x, y) in options {
            let retired = seg(u_id, x);
            let new_carrier = seg(f_id, y);
            let (ra, rb) = eng.inst.seg_points(retired);
            if line.crosses_segment(ra, rb) {
                continue;
            }
            let (ca, cb) = eng.inst.seg_points(new_carrier);
            if !crosses_all(eng, ca, cb, next, &rest) {
                continue;
            }
            if rest.is_empty() && line.crosses_segment(ca, cb) {
                continue;
            }
            if !rest.is_empty() {
                // The moving end alternates sides on every later step (the
                // retired segment must stay off the line), so commit now to
                // the side that leaves the carrier straddling the line at the
                // final flip, where both inserted segments must avoid it.
                let f_side = line.side(eng.inst.point(f_id));
                let y_side = line.side(eng.inst.point(y));
                let parity: i32 = if rest.len() % 2 == 1 { 1 } else { -1 };
                if y_side != 0 && f_side != 0 && y_side * parity != -f_side {
                    continue;
                }
            }
            choice = Some((retired, new_carrier, y));
            break;
        }
        let (retired, new_carrier, y) = choice.ok_or_else(|| {
            internal(format!("liberate: neither reconnection of {next:?} sustains the chain"))
        })?;
        eng.flip((carrier, next), (retired, new_carrier), format!("{tag}/chain"))?;
        flips += 1;
        carrier = new_carrier;
        u_id = y;
    }

    let leftovers = w_keys(eng);
    if !leftovers.is_empty() {
        return Err(internal(format!(
            "liberate: segments still cross the line: {leftovers:?}"
        )));
    }
    Ok(flips)
}

/// For a segment pq meeting the interior of triangle abc, picks the first of
/// pa, pb, pc, qa, qb, qc (in that order) whose interior meets the triangle
/// interior. Such a segment always exists; exhaustion is an internal error.
pub fn triangle_hide_pick(
    a: Point,
    b: Point,
    c: Point,
    p: Point,
    q: Point,
) -> Result<(Point, Point), StrategyError> {
    use crate::geometry::orient;
    // CCW-oriented copy of the triangle; candidates keep the given order.
    let (ta, tb, tc) = if orient(a, b, c) > 0 { (a, b, c) } else { (a, c, b) };
    let inside =
        |u: Point| orient(ta, tb, u) > 0 && orient(tb, tc, u) > 0 && orient(tc, ta, u) > 0;
    let meets = inside(p)
        || inside(q)
        || segments_cross(p, q, ta, tb)
        || segments_cross(p, q, tb, tc)
        || segments_cross(p, q, tc, ta);
    if !meets {
        return Err(pre("triangle_hide_pick: segment pq misses the triangle interior"));
    }
    // A segment from triangle vertex v meets the interior iff its other
    // endpoint lies strictly inside the CCW cone at v.
    let enters = |u: Point, v: Point| {
        let (nxt, prv) = if v.id == ta.id {
            (tb, tc)
        } else if v.id == tb.id {
            (tc, ta)
        } else {
            (ta, tb)
        };
        orient(v, nxt, u) > 0 && orient(prv, v, u) > 0
    };
    for (u, v) in [(p, a), (p, b), (p, c), (q, a), (q, b), (q, c)] {
        if enters(u, v) {
            return Ok((u, v));
        }
    }
    Err(internal("triangle_hide_pick: no candidate meets the triangle interior"))
}

/// Standalone strategy: pick the first matching segment whose supporting-line
/// crossers all cross the segment itself, liberate that line, then clean up
/// leftover crossings (which cannot re-enter the line).
pub fn run(eng: &mut Engine) -> Result<(), StrategyError> {
    if eng.inst.property != Property::Matching {
        return Err(pre("liberate_line requires a matching (free reconnection choice)"));
    }
    if !eng.has_crossings() {
        return Ok(());
    }
    let mut target: Option<(SegKey, OrientedLine)> = None;
    let mut best = 0usize;
    for &k in eng.inst.segments.keys() {
        let (p, q) = eng.inst.seg_points(k);
        let line = OrientedLine::through(p, q);
        let crossers: Vec<SegKey> = eng
            .inst
            .segments
            .keys()
            .copied()
            .filter(|&o| o != k)
            .filter(|&o| {
                let (a, b) = eng.inst.seg_points(o);
                line.crosses_segment(a, b)
            })
            .collect();
        if crossers.len() > best && crossers.iter().all(|&o| eng.inst.seg_crosses(k, o)) {
            best = crossers.len();
            target = Some((k, line));
        }
    }
    let Some((pq, line)) = target else {
        return Err(pre(
            "liberate_line: no segment whose supporting-line crossers all cross it",
        ));
    };
    liberate(eng, pq, |_, _| true, "lib")?;
    while let Some((s1, s2)) = eng.first_crossing_pair() {
        let cands = eng.inst.legal_insertions(s1, s2)?;
        let ins = cands
            .first()
            .copied()
            .ok_or_else(|| internal("liberate_line cleanup: no legal insertion"))?;
        eng.flip((s1, s2), ins, "cleanup")?;
    }
    for (&k, _) in &eng.inst.segments {
        let (a, b) = eng.inst.seg_points(k);
        if line.crosses_segment(a, b) {
            return Err(internal("liberate_line: cleanup re-crossed the freed line"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::model::{load_instance, InstanceDoc, Verdict};
    use crate::strategies::{run_strategy, StrategyId};

    fn mk(points: Vec<Point>, segments: Vec<[u32; 2]>) -> Instance {
        load_instance(InstanceDoc {
            points,
            segments,
            property: Property::Matching,
            geometry_class: None,
            convex_ids: None,
            t_ids: None,
        })
        .unwrap()
    }

    #[test]
    fn chain_frees_vertical_line() {
        let inst = mk(
            vec![
                Point::new(0, 0, 0),
                Point::new(1, 10, 80),
                Point::new(2, 90, 90),
                Point::new(3, 100, 10),
                Point::new(4, 50, 200),
                Point::new(5, 50, -100),
            ],
            vec![[4, 5], [0, 3], [1, 2]],
        );
        let trace = run_strategy(StrategyId::LiberateLine, &inst, false).unwrap();
        assert_eq!(trace.validate(), Verdict::Valid);
        let lib = trace.events.iter().filter(|e| e.tag.starts_with("lib")).count();
        // |W| = 2, so at most 4 line-freeing flips.
        assert!(lib <= 4, "lib flips = {lib}");
    }

    #[test]
    fn preprocessing_clears_crossers_that_cross_each_other() {
        let inst = mk(
            vec![
                Point::new(0, 0, 0),
                Point::new(1, 10, 80),
                Point::new(2, 90, 90),
                Point::new(3, 100, 10),
                Point::new(4, 50, 200),
                Point::new(5, 50, -100),
                Point::new(6, 5, 140),
                Point::new(7, 95, 180),
                Point::new(8, 10, 195),
                Point::new(9, 90, 130),
            ],
            vec![[4, 5], [0, 3], [1, 2], [6, 7], [8, 9]],
        );
        let trace = run_strategy(StrategyId::LiberateLine, &inst, false).unwrap();
        assert_eq!(trace.validate(), Verdict::Valid);
        assert!(trace.events.iter().any(|e| e.tag == "lib/pre"));
        let lib = trace.events.iter().filter(|e| e.tag.starts_with("lib")).count();
        // |W| = 4, so at most 6 line-freeing flips.
        assert!(lib <= 6, "lib flips = {lib}");
    }

    #[test]
    fn rejects_tour() {
        let pts = vec![
            Point::new(0, 0, 0),
            Point::new(1, 40, 5),
            Point::new(2, 45, 40),
            Point::new(3, 5, 45),
        ];
        let inst = load_instance(InstanceDoc {
            points: pts,
            segments: vec![[0, 2], [2, 1], [1, 3], [3, 0]],
            property: Property::Tour,
            geometry_class: None,
            convex_ids: None,
            t_ids: None,
        })
        .unwrap();
        assert!(matches!(
            run_strategy(StrategyId::LiberateLine, &inst, false),
            Err(StrategyError::Precondition(_))
        ));
    }
}
