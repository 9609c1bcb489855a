//! Strategies for points in convex position.
//!
//! `insertion` picks, for each removed crossing pair, the reconnection that
//! shrinks the product of segment depths by a factor of at least 3/4, giving
//! O(n log |C|) flips. `removal` targets the segment with the smallest
//! positive crossing depth and halves that depth with each flip, giving at
//! most n(floor(log2 |C|)+1) flips. The removal core is scope-parametric so
//! other strategies can run it on a sub-universe of segments.

use std::collections::{BTreeSet, HashMap};

use crate::engine::Engine;
use crate::model::{seg, Instance, Property, SegKey};

use super::{internal, pre, StrategyError};

/// Depth-product guided insertion choice for one convex crossing pair.
/// Returns the pair to insert plus a tag describing the case taken.
pub(crate) fn insertion_choice(
    pos: &HashMap<u32, usize>,
    s1: SegKey,
    s2: SegKey,
) -> Result<((SegKey, SegKey), &'static str), StrategyError> {
    let mut e: Vec<(usize, u32)> = [s1.0, s1.1, s2.0, s2.1]
        .iter()
        .map(|&id| {
            pos.get(&id)
                .map(|&p| (p, id))
                .ok_or_else(|| internal(format!("endpoint {id} outside convex order")))
        })
        .collect::<Result<_, _>>()?;
    e.sort_unstable();
    let [(w, wid), (x, xid), (y, yid), (z, zid)] = [e[0], e[1], e[2], e[3]];
    // Crossing diagonals of a convex quadrilateral interleave, so the removed
    // pair is (w,y),(x,z); the candidate insertions are the two side pairings.
    if x - w <= y - x || z - y <= y - x {
        Ok(((seg(wid, xid), seg(yid, zid)), "case12"))
    } else {
        Ok(((seg(wid, zid), seg(xid, yid)), "case3"))
    }
}

pub fn insertion(eng: &mut Engine) -> Result<(), StrategyError> {
    if !eng.inst.t_ids.is_empty() {
        return Err(pre("convex_insertion requires all points in convex position"));
    }
    if !matches!(eng.inst.property, Property::Matching | Property::Multigraph) {
        return Err(pre(
            "convex_insertion needs a free reconnection choice; property must be matching or multigraph",
        ));
    }
    insertion_pass(eng, "insertion")
}

/// Runs the depth-product insertion loop until crossing-free (no
/// precondition checks; callers guarantee a convex universe).
pub(crate) fn insertion_pass(eng: &mut Engine, tag: &str) -> Result<(), StrategyError> {
    let pos = super::ccw_positions(&eng.inst);
    while let Some((s1, s2)) = eng.first_crossing_pair() {
        let (ins, case) = insertion_choice(&pos, s1, s2)?;
        eng.flip((s1, s2), ins, format!("{tag}/{case}"))?;
    }
    Ok(())
}

pub fn removal(eng: &mut Engine) -> Result<(), StrategyError> {
    if !eng.inst.t_ids.is_empty() {
        return Err(pre("convex_removal requires all points in convex position"));
    }
    let order = eng.inst.convex_ids.clone();
    removal_scoped(eng, &order, |_, _| true, "removal")?;
    Ok(())
}

/// Crossing-depth-halving removal over the sub-universe of segments selected
/// by `in_scope`, whose endpoints must all appear in the convex CCW `order`.
/// Only crossings between two in-scope segments are eliminated. Returns the
/// number of flips performed.
pub(crate) fn removal_scoped<F>(
    eng: &mut Engine,
    order: &[u32],
    in_scope: F,
    tag: &str,
) -> Result<usize, StrategyError>
where
    F: Fn(&Instance, SegKey) -> bool,
{
    removal_scoped_hooked(eng, order, in_scope, tag, &mut |_| {})
}

/// Like `removal_scoped`, but reports every flip event to `hook` so callers
/// can track an evolving segment scope.
pub(crate) fn removal_scoped_hooked<F>(
    eng: &mut Engine,
    order: &[u32],
    in_scope: F,
    tag: &str,
    hook: &mut dyn FnMut(&crate::model::FlipEvent),
) -> Result<usize, StrategyError>
where
    F: Fn(&Instance, SegKey) -> bool,
{
    let pos: HashMap<u32, usize> = order.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let budget = 16 * (eng.inst.n() + 2) * (usize::BITS as usize + 2) + 64;
    let mut flips = 0usize;
    loop {
        // Scope segments and their in-scope crossers.
        let scope: Vec<SegKey> = eng
            .inst
            .segments
            .keys()
            .copied()
            .filter(|&k| in_scope(&eng.inst, k))
            .collect();
        let scope_set: BTreeSet<SegKey> = scope.iter().copied().collect();
        let mut crossers: HashMap<SegKey, Vec<SegKey>> = HashMap::new();
        for &k in &scope {
            let cs: Vec<SegKey> = eng
                .crossers(k)
                .into_iter()
                .filter(|c| scope_set.contains(c))
                .collect();
            if !cs.is_empty() {
                crossers.insert(k, cs);
            }
        }
        if crossers.is_empty() {
            return Ok(flips);
        }
        if flips > budget {
            return Err(internal(format!("{tag}: flip budget exceeded")));
        }
        let hot: BTreeSet<u32> = crossers
            .keys()
            .flat_map(|&(a, b)| [a, b])
            .collect();
        let span = |k: SegKey| -> Result<(usize, usize), StrategyError> {
            let gp = |id: u32| {
                pos.get(&id)
                    .copied()
                    .ok_or_else(|| internal(format!("{tag}: endpoint {id} outside scope order")))
            };
            let (i, j) = (gp(k.0)?, gp(k.1)?);
            Ok((i.min(j), i.max(j)))
        };
        let counted = |i: usize, j: usize| -> Vec<u32> {
            order[i + 1..j]
                .iter()
                .copied()
                .filter(|id| hot.contains(id))
                .collect()
        };
        // Target: in-scope crossing segment of minimum crossing depth.
        let mut best: Option<(usize, SegKey, usize, usize)> = None;
        for &k in crossers.keys() {
            let (i, j) = span(k)?;
            let d = counted(i, j).len();
            if best.map_or(true, |(bd, bk, _, _)| (d, k) < (bd, bk)) {
                best = Some((d, k, i, j));
            }
        }
        let (k, target, i, j) = best.ok_or_else(|| internal("no removal target"))?;
        let cs = counted(i, j);
        debug_assert_eq!(cs.len(), k);
        if k == 0 {
            return Err(internal(format!(
                "{tag}: crossing segment {target:?} has crossing depth 0"
            )));
        }
        let im = k.div_ceil(2);
        let q = cs[im - 1];
        let partner = crossers[&target]
            .iter()
            .copied()
            .filter(|&c| c.0 == q || c.1 == q)
            .min()
            .ok_or_else(|| {
                internal(format!(
                    "{tag}: counted median {q} has no in-scope segment crossing {target:?}"
                ))
            })?;
        let (a_id, b_id) = (order[i], order[j]);
        // Short side of the split: im-1 counted points before q, k-im after.
        let short_end = if im - 1 <= k - im { a_id } else { b_id };
        let desired = seg(q, short_end);
        let cands = eng.inst.legal_insertions(target, partner)?;
        let ins = cands
            .iter()
            .copied()
            .find(|&(x, y)| x == desired || y == desired)
            .or_else(|| cands.first().copied())
            .ok_or_else(|| internal(format!("{tag}: no legal insertion")))?;
        // Whichever q-segment gets inserted, its crossing depth is at most
        // floor(k/2) measured against the pre-flip hot set.
        let new_q_seg = if ins.0 .0 == q || ins.0 .1 == q { ins.0 } else { ins.1 };
        let (ni, nj) = span(new_q_seg)?;
        let nd = counted(ni, nj).len();
        if nd > k / 2 {
            return Err(internal(format!(
                "{tag}: inserted segment depth {nd} exceeds half of {k}"
            )));
        }
        eng.flip((target, partner), ins, format!("{tag}/k={k}"))?;
        let ev = eng.events.last().unwrap().clone();
        hook(&ev);
        flips += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::model::{load_instance, InstanceDoc, Verdict};
    use crate::strategies::{run_strategy, StrategyId};

    fn octagon(segments: Vec<[u32; 2]>, property: Property) -> Instance {
        let pts = vec![
            Point::new(0, 100, 0),
            Point::new(1, 171, 29),
            Point::new(2, 200, 100),
            Point::new(3, 171, 171),
            Point::new(4, 100, 200),
            Point::new(5, 29, 171),
            Point::new(6, 0, 100),
            Point::new(7, 29, 29),
        ];
        load_instance(InstanceDoc {
            points: pts,
            segments,
            property,
            geometry_class: None,
            convex_ids: None,
            t_ids: None,
        })
        .unwrap()
    }

    #[test]
    fn insertion_untangles_and_respects_depth_bound() {
        let inst = octagon(
            vec![[0, 4], [1, 5], [2, 6], [3, 7]],
            Property::Matching,
        );
        let trace = run_strategy(StrategyId::ConvexInsertion, &inst, false).unwrap();
        assert_eq!(trace.validate(), Verdict::Valid);
        // n * log_{4/3}(c) + 1 with n=4, c=8.
        let bound = 4.0 * 8.0f64.log2() / (4.0f64 / 3.0).log2() + 1.0;
        assert!((trace.events.len() as f64) <= bound);
    }

    #[test]
    fn insertion_rejects_tour() {
        let inst = octagon(
            vec![[0, 2], [2, 4], [4, 6], [6, 0], [1, 3], [3, 5], [5, 7], [7, 1]],
            Property::Multigraph,
        );
        // Multigraph variant runs fine...
        assert!(run_strategy(StrategyId::ConvexInsertion, &inst, false).is_ok());
        // ...while a tour is rejected up front.
        let tour = octagon(
            vec![[0, 3], [3, 6], [6, 1], [1, 4], [4, 7], [7, 2], [2, 5], [5, 0]],
            Property::Tour,
        );
        assert!(matches!(
            run_strategy(StrategyId::ConvexInsertion, &tour, false),
            Err(StrategyError::Precondition(_))
        ));
    }

    #[test]
    fn removal_untangles_tour_within_bound() {
        let inst = octagon(
            vec![[0, 3], [3, 6], [6, 1], [1, 4], [4, 7], [7, 2], [2, 5], [5, 0]],
            Property::Tour,
        );
        let trace = run_strategy(StrategyId::ConvexRemoval, &inst, false).unwrap();
        assert_eq!(trace.validate(), Verdict::Valid);
        let n = 8usize;
        let bound = n * ((8f64).log2().floor() as usize + 1);
        assert!(trace.events.len() <= bound, "{} > {bound}", trace.events.len());
    }

    #[test]
    fn removal_handles_multigraph_multiplicity() {
        let inst = octagon(
            vec![[0, 4], [0, 4], [1, 5], [2, 6]],
            Property::Multigraph,
        );
        let trace = run_strategy(StrategyId::ConvexRemoval, &inst, false).unwrap();
        assert_eq!(trace.validate(), Verdict::Valid);
        let fin = trace.final_state().unwrap();
        assert!(fin.is_crossing_free());
        assert_eq!(fin.n(), 4);
    }
}
