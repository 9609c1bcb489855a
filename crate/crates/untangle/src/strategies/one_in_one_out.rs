//! Strategy for one non-convex point strictly inside the hull of C and one
//! strictly outside. Four phases:
//! 1. CC x CC — convex removal over the C-segments.
//! 2. Segments at the inside point q' vs. C-segments — farthest-first flips
//!    restricted to C-crossers, looping because an inserted C-segment may
//!    cross other q'-segments.
//! 3. Segments at the outside point q (other than qq') — farthest-first over
//!    all crossers; if a flip creates the segment qq' itself, phase 4 takes
//!    over.
//! 4. Crossings with qq' and q-incident segments — farthest-first anchored
//!    at q, with a scoped convex removal if CC crossings reappear.

use crate::engine::Engine;
use crate::geometry::{locate_in_hull, HullPosition};
use crate::model::GeometryClass;

use super::{
    convex, internal,
    one_point::{farthest_first_bounded, farthest_first_fragment},
    pre, StrategyError,
};

pub fn run(eng: &mut Engine) -> Result<(), StrategyError> {
    eng.inst
        .check_geometry_class(GeometryClass::OneInOneOut)
        .map_err(|e| pre(format!("one_in_one_out_removal: {e}")))?;
    let hull = eng.inst.convex_points();
    let mut q_out = None;
    let mut q_in = None;
    for &id in &eng.inst.t_ids {
        match locate_in_hull(eng.inst.point(id), &hull) {
            HullPosition::Outside => q_out = Some(id),
            HullPosition::Inside => q_in = Some(id),
            HullPosition::OnBoundary => {
                return Err(pre("one_in_one_out_removal: T point on the hull boundary"))
            }
        }
    }
    let (q, q2) = (q_out.unwrap(), q_in.unwrap());

    // Phase 1: clear CC x CC.
    let order = eng.inst.convex_ids.clone();
    convex::removal_scoped(eng, &order, |inst, k| !inst.is_t_segment(k), "cc_removal")?;

    // Phase 2: clear q'-incident segments against C-segments. Each fragment
    // only shrinks its own segment's C-crosser set, and an inserted
    // C-segment may cross a different q'-segment, so loop with a budget.
    let n = eng.inst.n();
    let deg = |eng: &Engine, id: u32| -> usize {
        eng.inst
            .segments
            .iter()
            .filter(|(&k, _)| k.0 == id || k.1 == id)
            .map(|(_, &m)| m as usize)
            .sum()
    };
    let mut rounds = 0usize;
    let guard = 4 * (deg(eng, q2) + 1) * (n + 1) + 16;
    loop {
        let target = eng
            .inst
            .segments
            .keys()
            .copied()
            .filter(|&k| (k.0 == q2 || k.1 == q2) && k != crate::model::seg(q, q2))
            .find(|&k| {
                eng.crossers(k)
                    .iter()
                    .any(|&c| !eng.inst.is_t_segment(c))
            });
        let Some(s) = target else { break };
        rounds += 1;
        if rounds > guard {
            return Err(internal("one_in_one_out_removal: inner-point budget exceeded"));
        }
        farthest_first_fragment(eng, s, q2, |inst, k| !inst.is_t_segment(k), "q_in")?;
    }

    // Phase 3: clear q-incident segments other than qq'. Farthest-first from
    // q clears each; a flip can produce the segment qq', which phase 4 owns.
    let mut rounds = 0usize;
    let guard = 4 * (deg(eng, q) + 1) * (n + 1) + 16;
    loop {
        let target = eng
            .inst
            .segments
            .keys()
            .copied()
            .filter(|&k| (k.0 == q || k.1 == q) && k != crate::model::seg(q, q2))
            .find(|&k| !eng.crossers(k).is_empty());
        let Some(s) = target else { break };
        rounds += 1;
        if rounds > guard {
            return Err(internal("one_in_one_out_removal: outer-point budget exceeded"));
        }
        // A flip between two T-incident segments can leave the crosser count
        // unchanged, so the strict fragment does not apply; the budget per
        // fragment is proportional to deg(q') * n.
        let frag_budget = 4 * (deg(eng, q2) + 2) * (n + 1) + 16;
        farthest_first_bounded(
            eng,
            s,
            q,
            |_, _| true,
            frag_budget,
            Some(crate::model::seg(q, q2)),
            "q_out",
        )?;
    }

    // Phase 4: whatever remains crosses qq' or a q-incident segment (or is a
    // reappeared CC pair). Alternate farthest-first at q and CC cleanup.
    let mut rounds = 0usize;
    let guard = 8 * (deg(eng, q) + deg(eng, q2) + 2) * (n + 1) + 32;
    while eng.has_crossings() {
        rounds += 1;
        if rounds > guard {
            return Err(internal("one_in_one_out_removal: final budget exceeded"));
        }
        let q_seg = eng
            .inst
            .segments
            .keys()
            .copied()
            .filter(|&k| k.0 == q || k.1 == q)
            .find(|&k| !eng.crossers(k).is_empty());
        if let Some(s) = q_seg {
            let frag_budget = 4 * (deg(eng, q) + deg(eng, q2) + 2) * (n + 1) + 16;
            farthest_first_bounded(eng, s, q, |_, _| true, frag_budget, None, "final_q")?;
            continue;
        }
        let q2_seg = eng
            .inst
            .segments
            .keys()
            .copied()
            .filter(|&k| k.0 == q2 || k.1 == q2)
            .find(|&k| !eng.crossers(k).is_empty());
        if let Some(s) = q2_seg {
            let frag_budget = 4 * (deg(eng, q) + deg(eng, q2) + 2) * (n + 1) + 16;
            farthest_first_bounded(eng, s, q2, |_, _| true, frag_budget, None, "final_q_in")?;
            continue;
        }
        // Only CC x CC crossings remain; clear and re-check.
        let order = eng.inst.convex_ids.clone();
        convex::removal_scoped(eng, &order, |inst, k| !inst.is_t_segment(k), "final_cc")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::model::{load_instance, InstanceDoc, Instance, Property, Verdict};
    use crate::strategies::{run_strategy, StrategyId};

    fn square_in_out(segments: Vec<[u32; 2]>, property: Property) -> Instance {
        let pts = vec![
            Point::new(0, 0, 0),
            Point::new(1, 100, 0),
            Point::new(2, 100, 100),
            Point::new(3, 0, 100),
            Point::new(4, 43, 51),  // inside
            Point::new(5, 160, 57), // outside
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
    fn untangles_mixed_crossings() {
        // CC x CC diagonals, a q'-segment crossing a C-segment, and a
        // q-segment entering the hull.
        let inst = square_in_out(
            vec![[0, 2], [1, 3], [4, 1], [5, 3], [0, 1]],
            Property::Multigraph,
        );
        let trace = run_strategy(StrategyId::OneInOneOutRemoval, &inst, false).unwrap();
        assert_eq!(trace.validate(), Verdict::Valid);
        assert!(trace.final_state().unwrap().is_crossing_free());
    }

    #[test]
    fn handles_tt_segment() {
        // The segment qq' crosses a C-segment; also a q'-segment crossing.
        let inst = square_in_out(
            vec![[4, 5], [1, 2], [4, 0], [2, 3]],
            Property::Multigraph,
        );
        let trace = run_strategy(StrategyId::OneInOneOutRemoval, &inst, false).unwrap();
        assert_eq!(trace.validate(), Verdict::Valid);
        assert!(trace.final_state().unwrap().is_crossing_free());
    }

    #[test]
    fn rejects_two_inside() {
        let pts = vec![
            Point::new(0, 0, 0),
            Point::new(1, 100, 0),
            Point::new(2, 100, 100),
            Point::new(3, 0, 100),
            Point::new(4, 40, 46),
            Point::new(5, 63, 52),
        ];
        let inst = load_instance(InstanceDoc {
            points: pts,
            segments: vec![[4, 1], [5, 3]],
            property: Property::Matching,
            geometry_class: None,
            convex_ids: None,
            t_ids: Some(vec![4, 5]),
        })
        .unwrap();
        assert!(matches!(
            run_strategy(StrategyId::OneInOneOutRemoval, &inst, false),
            Err(StrategyError::Precondition(_))
        ));
    }
}
