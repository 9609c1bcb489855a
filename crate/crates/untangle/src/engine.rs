//! Mutable execution state for strategies: the evolving instance, the event
//! log, and an incrementally maintained crossing index (O(n) per flip).
//! Every flip still goes through the fully validated `Instance::apply_flip`.

use std::collections::{BTreeSet, HashMap};

use crate::model::{
    FlipEvent, Instance, ModelError, SegKey, StepSnapshot, UntangleTrace, Verdict,
};
use crate::potentials;

pub struct Engine {
    pub initial: Instance,
    pub inst: Instance,
    pub events: Vec<FlipEvent>,
    snaps: Option<Vec<StepSnapshot>>,
    nbrs: HashMap<SegKey, BTreeSet<SegKey>>,
}

impl Engine {
    pub fn new(inst: Instance, snapshots: bool) -> Self {
        let keys: Vec<SegKey> = inst.segments.keys().copied().collect();
        let mut nbrs: HashMap<SegKey, BTreeSet<SegKey>> = HashMap::new();
        for &k in &keys {
            nbrs.insert(k, BTreeSet::new());
        }
        for i in 0..keys.len() {
            for j in i + 1..keys.len() {
                if inst.seg_crosses(keys[i], keys[j]) {
                    nbrs.get_mut(&keys[i]).unwrap().insert(keys[j]);
                    nbrs.get_mut(&keys[j]).unwrap().insert(keys[i]);
                }
            }
        }
        Engine {
            initial: inst.clone(),
            inst,
            events: Vec::new(),
            snaps: if snapshots { Some(Vec::new()) } else { None },
            nbrs,
        }
    }

    /// Segments currently crossing `k` (empty set if `k` is absent).
    pub fn crossers(&self, k: SegKey) -> BTreeSet<SegKey> {
        self.nbrs.get(&k).cloned().unwrap_or_default()
    }

    pub fn has_crossings(&self) -> bool {
        self.nbrs.values().any(|s| !s.is_empty())
    }

    /// Lexicographically first crossing pair, normalized (k1 < k2).
    pub fn first_crossing_pair(&self) -> Option<(SegKey, SegKey)> {
        for (&k1, _) in &self.inst.segments {
            if let Some(ns) = self.nbrs.get(&k1) {
                if let Some(&k2) = ns.iter().find(|&&nb| nb > k1) {
                    return Some((k1, k2));
                }
            }
        }
        None
    }

    /// All crossing pairs, normalized and lexicographically sorted.
    pub fn crossing_pairs(&self) -> Vec<(SegKey, SegKey)> {
        let mut out = Vec::new();
        for (&k1, _) in &self.inst.segments {
            if let Some(ns) = self.nbrs.get(&k1) {
                for &k2 in ns.iter().filter(|&&nb| nb > k1) {
                    out.push((k1, k2));
                }
            }
        }
        out
    }

    pub fn flip(
        &mut self,
        removed: (SegKey, SegKey),
        inserted: (SegKey, SegKey),
        tag: impl Into<String>,
    ) -> Result<(), ModelError> {
        let ev = FlipEvent::new(removed, inserted, tag);
        let next = self.inst.apply_flip(&ev)?;
        for k in [ev.removed.0, ev.removed.1] {
            if !next.segments.contains_key(&k) {
                if let Some(ns) = self.nbrs.remove(&k) {
                    for nb in ns {
                        self.nbrs.get_mut(&nb).unwrap().remove(&k);
                    }
                }
            }
        }
        for k in [ev.inserted.0, ev.inserted.1] {
            if !self.inst.segments.contains_key(&k) {
                let mut set = BTreeSet::new();
                for (&other, _) in &next.segments {
                    if other != k && next.seg_crosses(k, other) {
                        set.insert(other);
                    }
                }
                for nb in &set {
                    self.nbrs.entry(*nb).or_default().insert(k);
                }
                self.nbrs.insert(k, set);
            }
        }
        self.inst = next;
        self.events.push(ev);
        if let Some(snaps) = &mut self.snaps {
            snaps.push(potentials::snapshot(&self.inst));
        }
        Ok(())
    }

    pub fn flips(&self) -> usize {
        self.events.len()
    }

    /// Builds the trace; the verdict reflects whether the final state is
    /// actually crossing-free.
    pub fn into_trace(self) -> UntangleTrace {
        let verdict = if self.has_crossings() {
            Verdict::Invalid {
                reason: "final state has crossings".into(),
                index: self.events.len(),
            }
        } else {
            Verdict::Valid
        };
        UntangleTrace {
            instance: self.initial,
            events: self.events,
            snapshots: self.snaps,
            verdict,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::model::{load_instance, InstanceDoc, Property};

    #[test]
    fn index_tracks_flips() {
        let pts = vec![
            Point::new(0, 0, 0),
            Point::new(1, 10, 1),
            Point::new(2, 11, 10),
            Point::new(3, 1, 11),
        ];
        let inst = load_instance(InstanceDoc {
            points: pts,
            segments: vec![[0, 2], [1, 3]],
            property: Property::Matching,
            geometry_class: None,
            convex_ids: None,
            t_ids: None,
        })
        .unwrap();
        let mut eng = Engine::new(inst, false);
        assert_eq!(eng.first_crossing_pair(), Some(((0, 2), (1, 3))));
        eng.flip(((0, 2), (1, 3)), ((0, 1), (2, 3)), "t").unwrap();
        assert!(!eng.has_crossings());
        assert_eq!(eng.crossing_pairs(), vec![]);
        let trace = eng.into_trace();
        assert_eq!(trace.verdict, Verdict::Valid);
        assert_eq!(trace.validate(), Verdict::Valid);
    }
}
