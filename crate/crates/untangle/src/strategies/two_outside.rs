//! Strategy for at most two non-convex points, both outside the hull of C.
//!
//! Works on a shrinking "scope" of segments. With no T-segments in scope the
//! convex removal finishes the job. Otherwise one T-segment is set aside, the
//! rest is untangled recursively, and the remaining crossings (all on the
//! set-aside segment) are resolved by either finding a splitter line that no
//! scope segment crosses (recursing on each side with strictly smaller
//! T-degree), dropping scope-uncrossable T-segments, or flipping toward such
//! a configuration. The T-degree of the scope strictly decreases along every
//! recursion edge, so the recursion depth is bounded by the initial T-degree,
//! which is capped.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use crate::engine::Engine;
use crate::geometry::{segments_cross, OrientedLine};
use crate::model::{seg, GeometryClass, Property, SegKey};

use super::{convex, crossing_param, internal, pre, StrategyError};

pub const DEFAULT_T_CAP: usize = 8;

pub fn run(eng: &mut Engine, cap: usize) -> Result<(), StrategyError> {
    eng.inst
        .check_geometry_class(GeometryClass::TwoTOutside)
        .map_err(|e| pre(format!("two_outside_removal: {e}")))?;
    if eng.inst.segments.values().any(|&m| m > 1) {
        return Err(pre("two_outside_removal does not support duplicate segments"));
    }
    // Under the multigraph property a flip may recreate an existing key;
    // the shrinking-scope bookkeeping needs duplicate-free states throughout,
    // which every other property guarantees structurally.
    if eng.inst.property == Property::Multigraph {
        return Err(pre(
            "two_outside_removal requires a duplicate-free property (matching, tour, or tree)",
        ));
    }
    let scope: BTreeSet<SegKey> = eng.inst.segments.keys().copied().collect();
    rec(eng, scope, cap)?;
    Ok(())
}

fn t_degree(eng: &Engine, scope: &BTreeSet<SegKey>) -> usize {
    scope
        .iter()
        .map(|&(a, b)| eng.inst.is_t_point(a) as usize + eng.inst.is_t_point(b) as usize)
        .sum()
}

fn scope_crossers(eng: &Engine, scope: &BTreeSet<SegKey>, k: SegKey) -> Vec<SegKey> {
    eng.crossers(k)
        .into_iter()
        .filter(|c| scope.contains(c))
        .collect()
}

fn scope_has_crossings(eng: &Engine, scope: &BTreeSet<SegKey>) -> bool {
    scope
        .iter()
        .any(|&k| !scope_crossers(eng, scope, k).is_empty())
}

fn scope_endpoints(scope: &BTreeSet<SegKey>) -> Vec<u32> {
    let mut pts: Vec<u32> = scope.iter().flat_map(|&(a, b)| [a, b]).collect();
    pts.sort_unstable();
    pts.dedup();
    pts
}

/// Number of scope segments crossing `line`.
fn lambda_scope(eng: &Engine, scope: &BTreeSet<SegKey>, line: &OrientedLine) -> usize {
    scope
        .iter()
        .filter(|&&k| {
            let (a, b) = eng.inst.seg_points(k);
            line.crosses_segment(a, b)
        })
        .count()
}

/// A splitter: a line through two scope/T points that no scope segment
/// crosses, with strictly smaller T-degree on each side. Segments lying on
/// the line cross neither side and are kept in the first one.
fn find_splitter(
    eng: &Engine,
    scope: &BTreeSet<SegKey>,
    t: usize,
) -> Option<(BTreeSet<SegKey>, BTreeSet<SegKey>)> {
    let mut pts = scope_endpoints(scope);
    for &q in &eng.inst.t_ids {
        if !pts.contains(&q) {
            pts.push(q);
        }
    }
    pts.sort_unstable();
    let mut lines: BTreeMap<(i64, i64, i128), OrientedLine> = BTreeMap::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let l = OrientedLine::through(eng.inst.point(pts[i]), eng.inst.point(pts[j]));
            lines.entry(l.key()).or_insert(l);
        }
    }
    'cand: for line in lines.values() {
        let mut a = BTreeSet::new();
        let mut b = BTreeSet::new();
        for &k in scope {
            let (p, q) = eng.inst.seg_points(k);
            let (sp, sq) = (line.side(p), line.side(q));
            if sp * sq < 0 {
                continue 'cand; // crosses the line
            }
            match sp + sq {
                s if s > 0 => {
                    a.insert(k);
                }
                s if s < 0 => {
                    b.insert(k);
                }
                _ => {
                    // Both endpoints on the line: crossing-free against both
                    // sides, but possibly not against segments set aside at
                    // outer levels, so it must stay visible in some scope.
                    a.insert(k);
                }
            }
        }
        let (ta, tb) = (t_degree(eng, &a), t_degree(eng, &b));
        if ta < t && tb < t {
            return Some((a, b));
        }
    }
    None
}

fn apply_scope_flip(
    eng: &mut Engine,
    scope: &mut BTreeSet<SegKey>,
    removed: (SegKey, SegKey),
    inserted: (SegKey, SegKey),
    tag: &str,
) -> Result<(), StrategyError> {
    eng.flip(removed, inserted, tag)?;
    scope.remove(&removed.0);
    scope.remove(&removed.1);
    for k in [inserted.0, inserted.1] {
        if !scope.insert(k) || eng.inst.segments.get(&k).copied().unwrap_or(0) > 1 {
            return Err(internal(format!("flip produced a duplicate scope segment {k:?}")));
        }
    }
    Ok(())
}

/// Untangles the scope with the convex removal, tracking scope membership
/// across flips.
fn scoped_cc_removal(
    eng: &mut Engine,
    scope: BTreeSet<SegKey>,
) -> Result<BTreeSet<SegKey>, StrategyError> {
    let order = eng.inst.convex_ids.clone();
    let cell = RefCell::new(scope);
    convex::removal_scoped_hooked(
        eng,
        &order,
        |_, k| cell.borrow().contains(&k),
        "cc",
        &mut |ev| {
            let mut s = cell.borrow_mut();
            s.remove(&ev.removed.0);
            s.remove(&ev.removed.1);
            s.insert(ev.inserted.0);
            s.insert(ev.inserted.1);
        },
    )?;
    Ok(cell.into_inner())
}

fn rec(
    eng: &mut Engine,
    scope: BTreeSet<SegKey>,
    cap: usize,
) -> Result<BTreeSet<SegKey>, StrategyError> {
    let t = t_degree(eng, &scope);
    if t > cap {
        return Err(pre(format!(
            "two_outside_removal: scope T-degree {t} exceeds the recursion cap {cap}"
        )));
    }
    if t == 0 {
        return scoped_cc_removal(eng, scope);
    }
    // Set one T-segment aside and untangle the rest with smaller T-degree.
    let s = scope
        .iter()
        .copied()
        .find(|&k| eng.inst.is_t_segment(k))
        .expect("t > 0 implies a T-segment");
    let mut rest = scope.clone();
    rest.remove(&s);
    let mut scope = rec(eng, rest, cap)?;
    scope.insert(s);

    let n0 = scope.len();
    let mut budget = 64 * (n0 + 2) * (n0 + 2) + 64;
    loop {
        // Retire T-segments that no segment over any two instance points can
        // cross (checked globally: segments set aside by outer recursion
        // levels still count).
        let drops: Vec<SegKey> = scope
            .iter()
            .copied()
            .filter(|&k| eng.inst.is_t_segment(k) && eng.inst.is_uncrossable(k))
            .collect();
        if !drops.is_empty() {
            for d in drops {
                scope.remove(&d);
            }
            continue;
        }
        if !scope_has_crossings(eng, &scope) {
            return Ok(scope);
        }
        if budget == 0 {
            return Err(internal("two_outside_removal: flip budget exceeded"));
        }
        budget -= 1;
        let t_now = t_degree(eng, &scope);
        if t_now == 0 {
            return scoped_cc_removal(eng, scope);
        }
        if let Some((a, b)) = find_splitter(eng, &scope, t_now) {
            let ra = rec(eng, a, cap)?;
            let rb = rec(eng, b, cap)?;
            return Ok(ra.into_iter().chain(rb).collect());
        }
        // Active T-segment with crossings.
        let active = scope
            .iter()
            .copied()
            .filter(|&k| eng.inst.is_t_segment(k))
            .find(|&k| !scope_crossers(eng, &scope, k).is_empty());
        let Some(s) = active else {
            // Only C-segment crossings remain.
            scope = scoped_cc_removal(eng, scope)?;
            continue;
        };
        let crossers = scope_crossers(eng, &scope, s);
        let tt = eng.inst.is_t_point(s.0) && eng.inst.is_t_point(s.1);
        if tt {
            // Flip with a crosser whose supporting line only s crosses; the
            // freed line then splits the two inserted T-segments.
            if crossers.iter().any(|&c| eng.inst.is_t_segment(c)) {
                return Err(internal(
                    "two_outside_removal: TT-segment crossed by another T-segment",
                ));
            }
            let pick = crossers
                .iter()
                .copied()
                .find(|&c| {
                    let (a, b) = eng.inst.seg_points(c);
                    lambda_scope(eng, &scope, &OrientedLine::through(a, b)) == 1
                })
                .ok_or_else(|| {
                    internal("two_outside_removal: no crosser line crossed only by the TT-segment")
                })?;
            let cands = eng.inst.legal_insertions(s, pick)?;
            let ins = cands
                .first()
                .copied()
                .ok_or_else(|| internal("two_outside_removal: no legal insertion"))?;
            apply_scope_flip(eng, &mut scope, (s, pick), ins, "tt_split")?;
            continue;
        }
        // s is a CT-segment with T endpoint q.
        let q = if eng.inst.is_t_point(s.0) { s.0 } else { s.1 };
        let w = crossers
            .iter()
            .copied()
            .max_by(|&a, &b| {
                crossing_param(&eng.inst, s, q, a)
                    .cmp(&crossing_param(&eng.inst, s, q, b))
                    .then(b.cmp(&a))
            })
            .unwrap();
        if !eng.inst.is_t_segment(w) {
            // Farthest crosser is a C-segment: one farthest-first step.
            let cands = eng.inst.legal_insertions(s, w)?;
            if cands.is_empty() {
                return Err(internal("two_outside_removal: no legal insertion"));
            }
            let count_new = |qd: SegKey| -> usize {
                let (c, d) = eng.inst.seg_points(qd);
                scope
                    .iter()
                    .filter(|&&k| k != s && k != w && k != qd)
                    .filter(|&&k| {
                        let (a, b) = eng.inst.seg_points(k);
                        segments_cross(a, b, c, d)
                    })
                    .count()
            };
            let q_seg_of = |pair: (SegKey, SegKey)| {
                if pair.0 .0 == q || pair.0 .1 == q {
                    pair.0
                } else {
                    pair.1
                }
            };
            let pick = cands
                .iter()
                .copied()
                .min_by_key(|&pair| (count_new(q_seg_of(pair)), pair))
                .unwrap();
            apply_scope_flip(eng, &mut scope, (s, w), pick, "ct_far")?;
            continue;
        }
        // Farthest crosser is the other CT-segment: prefer pairing the two
        // T points so the remaining crossings concentrate on one TT-segment.
        let q2 = if eng.inst.is_t_point(w.0) { w.0 } else { w.1 };
        let tt_seg = seg(q, q2);
        let cands = eng.inst.legal_insertions(s, w)?;
        let ins = cands
            .iter()
            .copied()
            .find(|&(x, y)| x == tt_seg || y == tt_seg)
            .or_else(|| cands.first().copied())
            .ok_or_else(|| internal("two_outside_removal: no legal insertion"))?;
        apply_scope_flip(eng, &mut scope, (s, w), ins, "ct_ct")?;
    }
}

#[cfg(test)]
mod tests {
    use crate::geometry::Point;
    use crate::model::{load_instance, Instance, InstanceDoc, Property, Verdict};
    use crate::strategies::{run_strategy, StrategyId};

    fn square_with_outsiders(segments: Vec<[u32; 2]>) -> Instance {
        let pts = vec![
            Point::new(0, 0, 0),
            Point::new(1, 100, 0),
            Point::new(2, 100, 100),
            Point::new(3, 0, 100),
            Point::new(4, -50, 50),
            Point::new(5, 150, 55),
        ];
        load_instance(InstanceDoc {
            points: pts,
            segments,
            property: Property::Matching,
            geometry_class: None,
            convex_ids: None,
            t_ids: Some(vec![4, 5]),
        })
        .unwrap()
    }

    #[test]
    fn tt_segment_through_hull() {
        let inst = square_with_outsiders(vec![[4, 5], [0, 2], [1, 3]]);
        let trace = run_strategy(StrategyId::TwoOutsideRemoval, &inst, false).unwrap();
        assert_eq!(trace.validate(), Verdict::Valid);
        assert!(trace.final_state().unwrap().is_crossing_free());
    }

    #[test]
    fn crossing_ct_segments_pair_up() {
        let inst = square_with_outsiders(vec![[1, 4], [0, 5], [2, 3]]);
        let trace = run_strategy(StrategyId::TwoOutsideRemoval, &inst, false).unwrap();
        assert_eq!(trace.validate(), Verdict::Valid);
        assert!(trace.final_state().unwrap().is_crossing_free());
    }

    #[test]
    fn rejects_inside_t_point() {
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
            run_strategy(StrategyId::TwoOutsideRemoval, &inst, false),
            Err(crate::strategies::StrategyError::Precondition(_))
        ));
    }
}
