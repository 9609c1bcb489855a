//! Baseline: repeatedly flip the lexicographically first crossing pair with
//! the lexicographically first legal reconnection. Works for every property
//! and geometry class; terminates because total length strictly decreases.

use crate::engine::Engine;

use super::{internal, StrategyError};

pub fn run(eng: &mut Engine) -> Result<(), StrategyError> {
    while let Some((s1, s2)) = eng.first_crossing_pair() {
        let cands = eng.inst.legal_insertions(s1, s2)?;
        let ins = cands
            .first()
            .copied()
            .ok_or_else(|| internal(format!("no legal insertion for {s1:?} x {s2:?}")))?;
        eng.flip((s1, s2), ins, "baseline")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::model::{load_instance, InstanceDoc, Property, Verdict};

    #[test]
    fn untangles_convex_matching() {
        // Regular-ish octagon with a fully crossing matching of long diagonals.
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
        let inst = load_instance(InstanceDoc {
            points: pts,
            segments: vec![[0, 4], [1, 5], [2, 6], [3, 7]],
            property: Property::Matching,
            geometry_class: None,
            convex_ids: None,
            t_ids: None,
        })
        .unwrap();
        let trace = crate::strategies::run_strategy(
            crate::strategies::StrategyId::BaselineNoclice,
            &inst,
            false,
        )
        .unwrap();
        assert_eq!(trace.validate(), Verdict::Valid);
        assert!(trace.final_state().unwrap().is_crossing_free());
    }

    #[test]
    fn untangles_tour() {
        let pts = vec![
            Point::new(0, 0, 0),
            Point::new(1, 40, 5),
            Point::new(2, 45, 40),
            Point::new(3, 5, 45),
        ];
        // Tour visiting 0-2-1-3: both diagonals cross.
        let inst = load_instance(InstanceDoc {
            points: pts,
            segments: vec![[0, 2], [2, 1], [1, 3], [3, 0]],
            property: Property::Tour,
            geometry_class: None,
            convex_ids: None,
            t_ids: None,
        })
        .unwrap();
        let trace = crate::strategies::run_strategy(
            crate::strategies::StrategyId::BaselineNoclice,
            &inst,
            true,
        )
        .unwrap();
        assert_eq!(trace.validate(), Verdict::Valid);
        let fin = trace.final_state().unwrap();
        assert!(fin.is_crossing_free());
        assert!(fin.check_property().is_ok());
    }
}
