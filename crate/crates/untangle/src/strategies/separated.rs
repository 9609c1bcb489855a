//! Strategies for T separated from C by horizontal strips (every T point
//! strictly above or strictly below the y-range of C).
//!
//! T-involving crossings are flipped with the vertical pairing rule: sort the
//! four endpoints top-to-bottom and reconnect top-two with bottom-two. Each
//! such flip strictly decreases the vertical index sum over T-segments, so at
//! most t·|P| of them happen. Remaining crossings are between C-segments and
//! use the convex insertion choice.

use crate::engine::Engine;
use crate::model::{seg, Property, SegKey};
use crate::potentials;

use super::{convex, internal, pre, StrategyError};

fn check_preconditions(eng: &Engine, name: &str) -> Result<(), StrategyError> {
    eng.inst
        .check_geometry_class(crate::model::GeometryClass::ParallelSeparated)
        .map_err(|e| pre(format!("{name}: {e}")))?;
    if !matches!(eng.inst.property, Property::Matching | Property::Multigraph) {
        return Err(pre(format!(
            "{name} needs a free reconnection choice; property must be matching or multigraph"
        )));
    }
    Ok(())
}

/// Lexicographically first crossing pair involving a T-segment.
fn first_t_pair(eng: &Engine) -> Option<(SegKey, SegKey)> {
    eng.crossing_pairs()
        .into_iter()
        .find(|&(a, b)| eng.inst.is_t_segment(a) || eng.inst.is_t_segment(b))
}

/// Flips a crossing pair using the vertical pairing rule.
pub(crate) fn vertical_flip(
    eng: &mut Engine,
    rank: &[usize],
    s1: SegKey,
    s2: SegKey,
    tag: &str,
) -> Result<(), StrategyError> {
    let mut ids = [s1.0, s1.1, s2.0, s2.1];
    ids.sort_by_key(|&id| rank[id as usize]);
    let ins = (seg(ids[0], ids[1]), seg(ids[2], ids[3]));
    if ins == (s1.min(s2), s1.max(s2)) {
        return Err(internal(format!(
            "vertical pairing of {s1:?} x {s2:?} reproduces the removed pair"
        )));
    }
    eng.flip((s1, s2), ins, tag)?;
    Ok(())
}

pub fn insertion(eng: &mut Engine) -> Result<(), StrategyError> {
    check_preconditions(eng, "separated_insertion")?;
    let rank = potentials::vertical_ranks(&eng.inst);
    let pos = super::ccw_positions(&eng.inst);
    loop {
        if let Some((s1, s2)) = first_t_pair(eng) {
            vertical_flip(eng, &rank, s1, s2, "t")?;
        } else if let Some((s1, s2)) = eng.first_crossing_pair() {
            let (ins, case) = convex::insertion_choice(&pos, s1, s2)?;
            eng.flip((s1, s2), ins, format!("cc/{case}"))?;
        } else {
            return Ok(());
        }
    }
}

pub fn removal_insertion(eng: &mut Engine) -> Result<(), StrategyError> {
    check_preconditions(eng, "separated_removal_insertion")?;
    let rank = potentials::vertical_ranks(&eng.inst);
    let pos = super::ccw_positions(&eng.inst);
    loop {
        // Phase 1: clear every crossing that involves a T-segment.
        while let Some((s1, s2)) = first_t_pair(eng) {
            let before = potentials::eta_t_sum(&eng.inst);
            vertical_flip(eng, &rank, s1, s2, "phase1")?;
            let after = potentials::eta_t_sum(&eng.inst);
            if after >= before {
                return Err(internal(format!(
                    "phase 1 flip did not decrease the T index sum ({before} -> {after})"
                )));
            }
        }
        // Phase 2: one convex insertion flip, then re-check for T crossings.
        match eng.first_crossing_pair() {
            None => return Ok(()),
            Some((s1, s2)) => {
                let (ins, case) = convex::insertion_choice(&pos, s1, s2)?;
                eng.flip((s1, s2), ins, format!("phase2/{case}"))?;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::model::{load_instance, GeometryClass, Instance, InstanceDoc, Verdict};
    use crate::strategies::{run_strategy, StrategyId};

    fn strip_instance() -> Instance {
        let pts = vec![
            Point::new(0, 0, 0),
            Point::new(1, 100, 0),
            Point::new(2, 100, 100),
            Point::new(3, 0, 100),
            Point::new(4, 10, 200),
            Point::new(5, 90, 200),
        ];
        load_instance(InstanceDoc {
            points: pts,
            segments: vec![[4, 1], [5, 0], [2, 3]],
            property: Property::Matching,
            geometry_class: Some(GeometryClass::ParallelSeparated),
            convex_ids: None,
            t_ids: Some(vec![4, 5]),
        })
        .unwrap()
    }

    #[test]
    fn insertion_clears_t_crossings_first() {
        let inst = strip_instance();
        let trace = run_strategy(StrategyId::SeparatedInsertion, &inst, false).unwrap();
        assert_eq!(trace.validate(), Verdict::Valid);
        assert!(trace.events.iter().all(|e| e.tag.starts_with("t") || e.tag.starts_with("cc")));
    }

    #[test]
    fn removal_insertion_phase1_within_eta_budget() {
        let inst = strip_instance();
        let t = inst.t_segments();
        let p = inst.points.len();
        let trace = run_strategy(StrategyId::SeparatedRemovalInsertion, &inst, false).unwrap();
        assert_eq!(trace.validate(), Verdict::Valid);
        let phase1 = trace
            .events
            .iter()
            .filter(|e| e.tag.starts_with("phase1"))
            .count();
        assert!(phase1 <= t * p, "{phase1} > {}", t * p);
    }

    #[test]
    fn rejects_non_separated_layout() {
        // T point inside the y-range of C.
        let pts = vec![
            Point::new(0, 0, 0),
            Point::new(1, 100, 10),
            Point::new(2, 50, 100),
            Point::new(3, 47, 31),
        ];
        let inst = load_instance(InstanceDoc {
            points: pts,
            segments: vec![[0, 1], [2, 3]],
            property: Property::Matching,
            geometry_class: None,
            convex_ids: None,
            t_ids: Some(vec![3]),
        })
        .unwrap();
        assert!(matches!(
            run_strategy(StrategyId::SeparatedInsertion, &inst, false),
            Err(StrategyError::Precondition(_))
        ));
    }
}
