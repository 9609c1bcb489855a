//! Farthest-first untangling of a single segment, and the full strategy for
//! instances with exactly one non-convex point q.
//!
//! The fragment repeatedly flips a segment s incident to q with its crosser
//! whose crossing point lies farthest from q. Each flip strictly shrinks the
//! set of segments crossing the q-incident segment, so the fragment ends
//! after at most |initial crossers| flips.

use crate::engine::Engine;
use crate::geometry::segments_cross;
use crate::model::{GeometryClass, Instance, SegKey};

use super::{crossing_param, internal, pre, StrategyError};

/// Runs farthest-first flips on segment `s` (incident to point `q_id`),
/// considering only crossers accepted by `filter`. Returns the final
/// q-incident segment, which has no filtered crossers. Each flip must
/// strictly shrink the crosser set, so the budget is the initial count.
pub(crate) fn farthest_first_fragment<F>(
    eng: &mut Engine,
    s: SegKey,
    q_id: u32,
    filter: F,
    tag: &str,
) -> Result<SegKey, StrategyError>
where
    F: Fn(&Instance, SegKey) -> bool,
{
    let budget = eng
        .crossers(s)
        .into_iter()
        .filter(|&k| filter(&eng.inst, k))
        .count();
    fragment_core(eng, s, q_id, filter, budget, true, None, tag)
}

/// Farthest-first flips without the per-flip shrink requirement, for phases
/// where a flip between two T-incident segments may leave the crosser count
/// unchanged. The caller supplies an explicit flip budget; if `stop_at` is
/// reached the fragment returns early so another phase can take over.
pub(crate) fn farthest_first_bounded<F>(
    eng: &mut Engine,
    s: SegKey,
    q_id: u32,
    filter: F,
    budget: usize,
    stop_at: Option<SegKey>,
    tag: &str,
) -> Result<SegKey, StrategyError>
where
    F: Fn(&Instance, SegKey) -> bool,
{
    fragment_core(eng, s, q_id, filter, budget, false, stop_at, tag)
}

#[allow(clippy::too_many_arguments)]
fn fragment_core<F>(
    eng: &mut Engine,
    mut s: SegKey,
    q_id: u32,
    filter: F,
    budget: usize,
    strict: bool,
    stop_at: Option<SegKey>,
    tag: &str,
) -> Result<SegKey, StrategyError>
where
    F: Fn(&Instance, SegKey) -> bool,
{
    let filtered = |eng: &Engine, s: SegKey| -> Vec<SegKey> {
        eng.crossers(s)
            .into_iter()
            .filter(|&k| filter(&eng.inst, k))
            .collect()
    };
    let mut flips = 0usize;
    loop {
        let crossers = filtered(eng, s);
        if crossers.is_empty() {
            return Ok(s);
        }
        if flips >= budget {
            return Err(internal(format!(
                "{tag}: flip budget exhausted ({budget})"
            )));
        }
        // Crosser whose crossing point is farthest from q along s.
        let w = crossers
            .iter()
            .copied()
            .max_by(|&a, &b| {
                crossing_param(&eng.inst, s, q_id, a)
                    .cmp(&crossing_param(&eng.inst, s, q_id, b))
                    .then(b.cmp(&a))
            })
            .unwrap();
        let cands = eng.inst.legal_insertions(s, w)?;
        if cands.is_empty() {
            return Err(internal(format!("{tag}: no legal insertion for {s:?} x {w:?}")));
        }
        // Count filtered crossers the new q-incident segment would have; one
        // removed copy of s and w each no longer counts.
        let mult = |k: SegKey| eng.inst.segments.get(&k).copied().unwrap_or(0);
        let count_new = |qd: SegKey| -> usize {
            let (c, d) = eng.inst.seg_points(qd);
            eng.inst
                .segments
                .keys()
                .filter(|&&k| filter(&eng.inst, k))
                .filter(|&&k| ((k != s && k != w) || mult(k) >= 2) && k != qd)
                .filter(|&&k| {
                    let (a, b) = eng.inst.seg_points(k);
                    segments_cross(a, b, c, d)
                })
                .count()
        };
        let q_seg_of = |pair: (SegKey, SegKey)| {
            if pair.0 .0 == q_id || pair.0 .1 == q_id {
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
        let new_s = q_seg_of(pick);
        if !(new_s.0 == q_id || new_s.1 == q_id) {
            return Err(internal(format!("{tag}: insertion lost the {q_id}-incident segment")));
        }
        if strict && count_new(new_s) >= crossers.len() {
            return Err(internal(format!(
                "{tag}: flip would not shrink the crosser set of the {q_id}-incident segment"
            )));
        }
        eng.flip((s, w), pick, format!("{tag}/far"))?;
        flips += 1;
        s = new_s;
        if stop_at == Some(s) {
            return Ok(s);
        }
    }
}

/// Standalone strategy: the instance must have exactly one segment incident
/// to a T point, and every crossing must involve it.
pub fn farthest_first_strategy(eng: &mut Engine) -> Result<(), StrategyError> {
    let tsegs: Vec<SegKey> = eng
        .inst
        .segments
        .iter()
        .filter(|(&k, _)| eng.inst.is_t_segment(k))
        .flat_map(|(&k, &m)| std::iter::repeat(k).take(m as usize))
        .collect();
    let [s] = tsegs[..] else {
        return Err(pre(format!(
            "farthest_first needs exactly one T-incident segment, found {}",
            tsegs.len()
        )));
    };
    for (a, b) in eng.crossing_pairs() {
        if a != s && b != s {
            return Err(pre(format!(
                "farthest_first: crossing {a:?} x {b:?} does not involve the T-incident segment"
            )));
        }
    }
    let q_id = if eng.inst.is_t_point(s.0) { s.0 } else { s.1 };
    farthest_first_fragment(eng, s, q_id, |_, _| true, "far")?;
    Ok(())
}

/// Full strategy for the one-T-point class: first untangle the C-segments
/// with convex removal, then clear each q-incident segment farthest-first.
pub fn run(eng: &mut Engine) -> Result<(), StrategyError> {
    eng.inst
        .check_geometry_class(GeometryClass::OneTPoint)
        .map_err(|e| pre(format!("one_point_removal: {e}")))?;
    let q_id = eng.inst.t_ids[0];
    let order = eng.inst.convex_ids.clone();
    super::convex::removal_scoped(eng, &order, |inst, k| !inst.is_t_segment(k), "cc_removal")?;
    let deg_q = eng
        .inst
        .segments
        .iter()
        .filter(|(&k, _)| k.0 == q_id || k.1 == q_id)
        .map(|(_, &m)| m as usize)
        .sum::<usize>();
    let guard = 4 * (deg_q + 1) * (eng.inst.n() + 1) + 16;
    let mut rounds = 0usize;
    loop {
        let target = eng
            .inst
            .segments
            .keys()
            .copied()
            .filter(|&k| k.0 == q_id || k.1 == q_id)
            .find(|&k| !eng.crossers(k).is_empty());
        let Some(s) = target else { break };
        rounds += 1;
        if rounds > guard {
            return Err(internal("one_point_removal: round budget exceeded"));
        }
        farthest_first_fragment(eng, s, q_id, |_, _| true, "q_seg")?;
    }
    if eng.has_crossings() {
        return Err(internal(
            "one_point_removal: crossings remain that avoid every q-incident segment",
        ));
    }
    Ok(())
}
