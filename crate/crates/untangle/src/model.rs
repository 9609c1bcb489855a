//! The segment multigraph, flips, property checking, and trace bookkeeping.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    self, convex_position, locate_in_hull, segments_cross, Color, HullPosition, Point, MAX_COORD,
};
use crate::potentials::PotentialReport;

/// Endpoint-id pair, always stored sorted.
pub type SegKey = (u32, u32);

pub fn seg(a: u32, b: u32) -> SegKey {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Multigraph,
    Matching,
    RedblueMatching,
    Tour,
    Tree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GeometryClass {
    #[serde(rename = "convex")]
    Convex,
    #[serde(rename = "one_T_point")]
    OneTPoint,
    #[serde(rename = "two_T_outside")]
    TwoTOutside,
    #[serde(rename = "two_T_inside")]
    TwoTInside,
    #[serde(rename = "one_in_one_out")]
    OneInOneOut,
    #[serde(rename = "parallel_separated")]
    ParallelSeparated,
    #[serde(rename = "T_outside_hull")]
    TOutsideHull,
    #[serde(rename = "general")]
    General,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("duplicate or non-dense point ids")]
    BadIds,
    #[error("coordinate overflow: |{0}| > 2^30")]
    CoordinateOverflow(i64),
    #[error("general position violation: {0}")]
    GeneralPosition(String),
    #[error("not a {0:?}: {1}")]
    PropertyViolation(Property, String),
    #[error("geometry_class {0:?} inconsistent with coordinates: {1}")]
    ClassMismatch(GeometryClass, String),
    #[error("segment {0:?} not in the multiset")]
    SegmentNotFound(SegKey),
    #[error("segments do not cross")]
    NoCrossing,
    #[error("invalid flip: {0}")]
    InvalidFlip(String),
    #[error("invalid instance: {0}")]
    Invalid(String),
}

/// On-disk instance document; see the JSON schema in the README.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub points: Vec<Point>,
    pub segments: Vec<[u32; 2]>,
    pub property: Property,
    #[serde(default)]
    pub geometry_class: Option<GeometryClass>,
    #[serde(default)]
    pub convex_ids: Option<Vec<u32>>,
    #[serde(default)]
    pub t_ids: Option<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceDoc", into = "InstanceDoc")]
pub struct Instance {
    /// Points indexed by id (dense 0..|P|).
    pub points: Vec<Point>,
    /// C in CCW order, canonicalized to start at the lexicographically
    /// smallest member.
    pub convex_ids: Vec<u32>,
    pub t_ids: Vec<u32>,
    pub segments: BTreeMap<SegKey, u32>,
    pub property: Property,
    pub geometry_class: GeometryClass,
}

impl TryFrom<InstanceDoc> for Instance {
    type Error = ModelError;
    fn try_from(doc: InstanceDoc) -> Result<Self, ModelError> {
        load_instance(doc)
    }
}

impl From<Instance> for InstanceDoc {
    fn from(inst: Instance) -> InstanceDoc {
        let mut segments = Vec::new();
        for (&(a, b), &mult) in &inst.segments {
            for _ in 0..mult {
                segments.push([a, b]);
            }
        }
        InstanceDoc {
            points: inst.points.clone(),
            segments,
            property: inst.property,
            geometry_class: Some(inst.geometry_class),
            convex_ids: Some(inst.convex_ids.clone()),
            t_ids: Some(inst.t_ids.clone()),
        }
    }
}

/// Checks that no two points coincide and no three are collinear, by hashing
/// canonical directions around each point. O(|P|^2 log |P|).
fn check_general_position(points: &[Point]) -> Result<(), ModelError> {
    let mut seen = HashSet::new();
    for p in points {
        if !seen.insert((p.x, p.y)) {
            return Err(ModelError::GeneralPosition(format!(
                "coincident points at ({}, {})",
                p.x, p.y
            )));
        }
    }
    for (i, p) in points.iter().enumerate() {
        let mut dirs = HashSet::new();
        for q in &points[i + 1..] {
            let (mut dx, mut dy) = (q.x - p.x, q.y - p.y);
            let g = num_integer::gcd(dx.abs(), dy.abs());
            dx /= g;
            dy /= g;
            if dx < 0 || (dx == 0 && dy < 0) {
                dx = -dx;
                dy = -dy;
            }
            if !dirs.insert((dx, dy)) {
                return Err(ModelError::GeneralPosition(format!(
                    "three collinear points through id {}",
                    p.id
                )));
            }
        }
    }
    Ok(())
}

/// Validates a document and produces a checked `Instance`.
pub fn load_instance(doc: InstanceDoc) -> Result<Instance, ModelError> {
    let n_points = doc.points.len();
    let mut points = doc.points.clone();
    points.sort_by_key(|p| p.id);
    if points
        .iter()
        .enumerate()
        .any(|(i, p)| p.id as usize != i)
    {
        return Err(ModelError::BadIds);
    }
    for p in &points {
        if p.x.abs() > MAX_COORD || p.y.abs() > MAX_COORD {
            return Err(ModelError::CoordinateOverflow(p.x.abs().max(p.y.abs())));
        }
    }
    check_general_position(&points)?;

    // Partition P into C and T.
    let (convex_set, t_set): (HashSet<u32>, HashSet<u32>) = match (&doc.convex_ids, &doc.t_ids) {
        (Some(c), _) => {
            let cs: HashSet<u32> = c.iter().copied().collect();
            let ts: HashSet<u32> = points
                .iter()
                .map(|p| p.id)
                .filter(|id| !cs.contains(id))
                .collect();
            if let Some(t) = &doc.t_ids {
                let given: HashSet<u32> = t.iter().copied().collect();
                if given != ts {
                    return Err(ModelError::Invalid(
                        "convex_ids and t_ids do not partition the points".into(),
                    ));
                }
            }
            (cs, ts)
        }
        (None, Some(t)) => {
            let ts: HashSet<u32> = t.iter().copied().collect();
            let cs = points
                .iter()
                .map(|p| p.id)
                .filter(|id| !ts.contains(id))
                .collect();
            (cs, ts)
        }
        (None, None) => {
            // Infer: all points convex, or hull vertices with interior rest.
            let all: Vec<Point> = points.clone();
            if convex_position(&all).is_some() {
                (all.iter().map(|p| p.id).collect(), HashSet::new())
            } else {
                let hull_idx = hull_of(&all);
                let hull_ids: HashSet<u32> = hull_idx.iter().map(|&i| all[i].id).collect();
                let hull_pts: Vec<Point> = hull_idx.iter().map(|&i| all[i]).collect();
                let interior_ok = all
                    .iter()
                    .filter(|p| !hull_ids.contains(&p.id))
                    .all(|&p| locate_in_hull(p, &hull_pts) == HullPosition::Inside);
                if !interior_ok {
                    return Err(ModelError::Invalid(
                        "cannot infer convex_ids; please provide them".into(),
                    ));
                }
                let t: HashSet<u32> = all
                    .iter()
                    .map(|p| p.id)
                    .filter(|id| !hull_ids.contains(id))
                    .collect();
                (hull_ids, t)
            }
        }
    };
    if convex_set.len() + t_set.len() != n_points {
        return Err(ModelError::Invalid("unknown ids in convex_ids/t_ids".into()));
    }

    let convex_points: Vec<Point> = points
        .iter()
        .filter(|p| convex_set.contains(&p.id))
        .copied()
        .collect();
    let order = convex_position(&convex_points)
        .ok_or_else(|| ModelError::Invalid("convex_ids are not in convex position".into()))?;
    let convex_ids: Vec<u32> = order.iter().map(|&i| convex_points[i].id).collect();
    let mut t_ids: Vec<u32> = t_set.iter().copied().collect();
    t_ids.sort_unstable();

    // Segment multiset.
    let mut segments: BTreeMap<SegKey, u32> = BTreeMap::new();
    for &[a, b] in &doc.segments {
        if a == b {
            return Err(ModelError::Invalid(format!("degenerate segment {a}-{a}")));
        }
        if a as usize >= n_points || b as usize >= n_points {
            return Err(ModelError::Invalid(format!("segment {a}-{b} uses unknown id")));
        }
        *segments.entry(seg(a, b)).or_insert(0) += 1;
    }

    let inst = Instance {
        points,
        convex_ids,
        t_ids,
        segments,
        property: doc.property,
        geometry_class: doc.geometry_class.unwrap_or(GeometryClass::General),
    };
    inst.check_property()?;
    let inferred = inst.infer_geometry_class();
    let inst = match doc.geometry_class {
        None => Instance {
            geometry_class: inferred,
            ..inst
        },
        Some(claimed) => {
            inst.check_geometry_class(claimed)?;
            inst
        }
    };
    Ok(inst)
}

fn hull_of(points: &[Point]) -> Vec<usize> {
    // Monotone chain returning hull vertex indices in CCW order.
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by_key(|&i| (points[i].x, points[i].y));
    let build = |iter: Box<dyn Iterator<Item = usize> + '_>| {
        let mut chain: Vec<usize> = Vec::new();
        for i in iter {
            while chain.len() >= 2
                && geometry::orient(
                    points[chain[chain.len() - 2]],
                    points[chain[chain.len() - 1]],
                    points[i],
                ) <= 0
            {
                chain.pop();
            }
            chain.push(i);
        }
        chain
    };
    let mut lower = build(Box::new(idx.iter().copied()));
    let upper = build(Box::new(idx.iter().rev().copied()));
    lower.pop();
    let mut hull = lower;
    let mut up = upper;
    up.pop();
    hull.extend(up);
    hull
}

impl Instance {
    pub fn point(&self, id: u32) -> Point {
        self.points[id as usize]
    }

    pub fn seg_points(&self, k: SegKey) -> (Point, Point) {
        (self.point(k.0), self.point(k.1))
    }

    pub fn convex_points(&self) -> Vec<Point> {
        self.convex_ids.iter().map(|&id| self.point(id)).collect()
    }

    pub fn is_t_point(&self, id: u32) -> bool {
        self.t_ids.contains(&id)
    }

    pub fn is_t_segment(&self, k: SegKey) -> bool {
        self.is_t_point(k.0) || self.is_t_point(k.1)
    }

    /// Number of segments, with multiplicity.
    pub fn n(&self) -> usize {
        self.segments.values().map(|&m| m as usize).sum()
    }

    /// Number of T-segments, with multiplicity.
    pub fn t_segments(&self) -> usize {
        self.segments
            .iter()
            .filter(|(&k, _)| self.is_t_segment(k))
            .map(|(_, &m)| m as usize)
            .sum()
    }

    /// Sum of the degrees of the points in T (TT-segments counted twice).
    pub fn t_degree_sum(&self) -> usize {
        self.segments
            .iter()
            .map(|(&(a, b), &m)| {
                (self.is_t_point(a) as usize + self.is_t_point(b) as usize) * m as usize
            })
            .sum()
    }

    pub fn degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.points.len()];
        for (&(a, b), &m) in &self.segments {
            deg[a as usize] += m;
            deg[b as usize] += m;
        }
        deg
    }

    pub fn seg_crosses(&self, k1: SegKey, k2: SegKey) -> bool {
        let (a, b) = self.seg_points(k1);
        let (c, d) = self.seg_points(k2);
        segments_cross(a, b, c, d)
    }

    /// All unordered crossing pairs, lexicographic, one entry per key pair.
    pub fn crossing_pairs(&self) -> Vec<(SegKey, SegKey)> {
        let keys: Vec<SegKey> = self.segments.keys().copied().collect();
        let mut out = Vec::new();
        for i in 0..keys.len() {
            for j in i + 1..keys.len() {
                if self.seg_crosses(keys[i], keys[j]) {
                    out.push((keys[i], keys[j]));
                }
            }
        }
        out
    }

    pub fn is_crossing_free(&self) -> bool {
        self.crossing_pairs().is_empty()
    }

    pub fn check_property(&self) -> Result<(), ModelError> {
        check_property(self.property, &self.points, &self.segments)
    }

    fn infer_geometry_class(&self) -> GeometryClass {
        let hull = self.convex_points();
        let loc = |id: u32| locate_in_hull(self.point(id), &hull);
        match self.t_ids.len() {
            0 => GeometryClass::Convex,
            1 => GeometryClass::OneTPoint,
            2 => {
                let (a, b) = (loc(self.t_ids[0]), loc(self.t_ids[1]));
                match (a, b) {
                    (HullPosition::Outside, HullPosition::Outside) => GeometryClass::TwoTOutside,
                    (HullPosition::Inside, HullPosition::Inside) => GeometryClass::TwoTInside,
                    _ => GeometryClass::OneInOneOut,
                }
            }
            _ => {
                if self.check_geometry_class(GeometryClass::ParallelSeparated).is_ok() {
                    GeometryClass::ParallelSeparated
                } else if self
                    .t_ids
                    .iter()
                    .all(|&id| loc(id) == HullPosition::Outside)
                {
                    GeometryClass::TOutsideHull
                } else {
                    GeometryClass::General
                }
            }
        }
    }

    pub fn check_geometry_class(&self, class: GeometryClass) -> Result<(), ModelError> {
        let hull = self.convex_points();
        let bad = |msg: &str| Err(ModelError::ClassMismatch(class, msg.to_string()));
        let loc = |id: u32| locate_in_hull(self.point(id), &hull);
        match class {
            GeometryClass::General => Ok(()),
            GeometryClass::Convex => {
                if self.t_ids.is_empty() {
                    Ok(())
                } else {
                    bad("T must be empty")
                }
            }
            GeometryClass::OneTPoint => {
                if self.t_ids.len() == 1 {
                    Ok(())
                } else {
                    bad("exactly one T point required")
                }
            }
            GeometryClass::TwoTOutside => {
                if self.t_ids.len() <= 2
                    && self.t_ids.iter().all(|&id| loc(id) == HullPosition::Outside)
                {
                    Ok(())
                } else {
                    bad("at most two T points, all outside hull(C)")
                }
            }
            GeometryClass::TwoTInside => {
                if self.t_ids.len() == 2
                    && self.t_ids.iter().all(|&id| loc(id) == HullPosition::Inside)
                {
                    Ok(())
                } else {
                    bad("exactly two T points strictly inside hull(C)")
                }
            }
            GeometryClass::OneInOneOut => {
                if self.t_ids.len() == 2 {
                    let locs = [loc(self.t_ids[0]), loc(self.t_ids[1])];
                    if locs.contains(&HullPosition::Inside) && locs.contains(&HullPosition::Outside)
                    {
                        return Ok(());
                    }
                }
                bad("exactly one T point inside and one outside")
            }
            GeometryClass::ParallelSeparated => {
                if hull.is_empty() {
                    return bad("C must be non-empty");
                }
                let cmax = hull.iter().map(|p| p.y).max().unwrap();
                let cmin = hull.iter().map(|p| p.y).min().unwrap();
                for &id in &self.t_ids {
                    let y = self.point(id).y;
                    if y <= cmax && y >= cmin {
                        return bad("every T point must be strictly above or below C");
                    }
                }
                Ok(())
            }
            GeometryClass::TOutsideHull => {
                if self.t_ids.iter().all(|&id| loc(id) == HullPosition::Outside) {
                    Ok(())
                } else {
                    bad("all T points must be outside hull(C)")
                }
            }
        }
    }

    /// The two reconnection candidates for a crossing pair, filtered by the
    /// instance property.
    pub fn legal_insertions(
        &self,
        s1: SegKey,
        s2: SegKey,
    ) -> Result<Vec<(SegKey, SegKey)>, ModelError> {
        for k in [s1, s2] {
            if !self.segments.contains_key(&k) {
                return Err(ModelError::SegmentNotFound(k));
            }
        }
        if s1 == s2 || !self.seg_crosses(s1, s2) {
            return Err(ModelError::NoCrossing);
        }
        let (a, b) = s1;
        let (c, d) = s2;
        let mut candidates = vec![
            order_pair(seg(a, c), seg(b, d)),
            order_pair(seg(a, d), seg(b, c)),
        ];
        candidates.sort();
        candidates.dedup();
        let mut out = Vec::new();
        for cand in candidates {
            let mut segs = self.segments.clone();
            remove_one(&mut segs, s1);
            remove_one(&mut segs, s2);
            *segs.entry(cand.0).or_insert(0) += 1;
            *segs.entry(cand.1).or_insert(0) += 1;
            if check_property(self.property, &self.points, &segs).is_ok() {
                out.push(cand);
            }
        }
        Ok(out)
    }

    /// Applies a fully validated flip, returning the new state.
    pub fn apply_flip(&self, event: &FlipEvent) -> Result<Instance, ModelError> {
        let (r1, r2) = event.removed;
        let (i1, i2) = event.inserted;
        for k in [r1, r2] {
            if !self.segments.contains_key(&k) {
                return Err(ModelError::InvalidFlip(format!(
                    "removed segment {k:?} not present"
                )));
            }
        }
        if !self.seg_crosses(r1, r2) {
            return Err(ModelError::InvalidFlip("removed pair does not cross".into()));
        }
        // Same four endpoints forming a 4-cycle.
        let mut removed_ids = [r1.0, r1.1, r2.0, r2.1];
        let mut inserted_ids = [i1.0, i1.1, i2.0, i2.1];
        removed_ids.sort_unstable();
        inserted_ids.sort_unstable();
        if removed_ids != inserted_ids || removed_ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(ModelError::InvalidFlip(
                "inserted pair is not a reconnection of the removed endpoints".into(),
            ));
        }
        if i1 == r1 || i1 == r2 || i2 == r1 || i2 == r2 {
            return Err(ModelError::InvalidFlip(
                "inserted pair repeats a removed segment".into(),
            ));
        }
        if self.seg_crosses_raw(i1, i2) {
            return Err(ModelError::InvalidFlip("inserted pair crosses".into()));
        }
        // Strict length decrease (exact comparison).
        let (ra, rb) = self.seg_points(r1);
        let (rc, rd) = self.seg_points(r2);
        let (ia, ib) = self.seg_points(i1);
        let (ic, id_) = self.seg_points(i2);
        if geometry::cmp_length_sums([(ra, rb), (rc, rd)], [(ia, ib), (ic, id_)])
            != std::cmp::Ordering::Greater
        {
            return Err(ModelError::InvalidFlip(
                "total length does not strictly decrease".into(),
            ));
        }
        let mut segs = self.segments.clone();
        remove_one(&mut segs, r1);
        remove_one(&mut segs, r2);
        *segs.entry(i1).or_insert(0) += 1;
        *segs.entry(i2).or_insert(0) += 1;
        check_property(self.property, &self.points, &segs)
            .map_err(|e| ModelError::InvalidFlip(format!("property violated: {e}")))?;
        Ok(Instance {
            segments: segs,
            ..self.clone()
        })
    }

    fn seg_crosses_raw(&self, k1: SegKey, k2: SegKey) -> bool {
        let (a, b) = self.seg_points(k1);
        let (c, d) = self.seg_points(k2);
        segments_cross(a, b, c, d)
    }

    /// Finest partition of S such that no candidate segment over one part's
    /// endpoints crosses a candidate segment over another part's endpoints.
    /// Brute force over candidate pairs; desk-scale instances only.
    pub fn split_components(&self) -> Vec<Instance> {
        let keys: Vec<SegKey> = self.segments.keys().copied().collect();
        if keys.is_empty() {
            return Vec::new();
        }
        let mut parent: Vec<usize> = (0..keys.len()).collect();
        fn find(parent: &mut Vec<usize>, i: usize) -> usize {
            if parent[i] != i {
                let r = find(parent, parent[i]);
                parent[i] = r;
            }
            parent[i]
        }
        let endpoint_set = |members: &[usize], keys: &[SegKey]| -> Vec<u32> {
            let mut s: Vec<u32> = members
                .iter()
                .flat_map(|&i| [keys[i].0, keys[i].1])
                .collect();
            s.sort_unstable();
            s.dedup();
            s
        };
        loop {
            let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
            for i in 0..keys.len() {
                let r = find(&mut parent, i);
                groups.entry(r).or_default().push(i);
            }
            let roots: Vec<usize> = groups.keys().copied().collect();
            let mut merged = false;
            'outer: for i in 0..roots.len() {
                for j in i + 1..roots.len() {
                    let pa = endpoint_set(&groups[&roots[i]], &keys);
                    let pb = endpoint_set(&groups[&roots[j]], &keys);
                    if self.candidate_cross(&pa, &pb) {
                        let (ri, rj) = (find(&mut parent, roots[i]), find(&mut parent, roots[j]));
                        parent[ri] = rj;
                        merged = true;
                        break 'outer;
                    }
                }
            }
            if !merged {
                break;
            }
        }
        let mut groups: BTreeMap<usize, Vec<SegKey>> = BTreeMap::new();
        for i in 0..keys.len() {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(keys[i]);
        }
        groups
            .into_values()
            .map(|ks| {
                let mut segs = BTreeMap::new();
                for k in ks {
                    segs.insert(k, self.segments[&k]);
                }
                let property =
                    if check_property(self.property, &self.points, &segs).is_ok() {
                        self.property
                    } else {
                        Property::Multigraph
                    };
                Instance {
                    segments: segs,
                    property,
                    ..self.clone()
                }
            })
            .collect()
    }

    fn candidate_cross(&self, pa: &[u32], pb: &[u32]) -> bool {
        for i in 0..pa.len() {
            for j in i + 1..pa.len() {
                for k in 0..pb.len() {
                    for l in k + 1..pb.len() {
                        if segments_cross(
                            self.point(pa[i]),
                            self.point(pa[j]),
                            self.point(pb[k]),
                            self.point(pb[l]),
                        ) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    /// True iff no segment over any two instance endpoints crosses s.
    pub fn is_uncrossable(&self, s: SegKey) -> bool {
        let (a, b) = self.seg_points(s);
        for i in 0..self.points.len() {
            for j in i + 1..self.points.len() {
                if segments_cross(self.points[i], self.points[j], a, b) {
                    return false;
                }
            }
        }
        true
    }
}

fn order_pair(a: SegKey, b: SegKey) -> (SegKey, SegKey) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

pub(crate) fn remove_one(segs: &mut BTreeMap<SegKey, u32>, k: SegKey) {
    match segs.get_mut(&k) {
        Some(m) if *m > 1 => *m -= 1,
        Some(_) => {
            segs.remove(&k);
        }
        None => panic!("remove_one on absent segment {k:?}"),
    }
}

/// Property check over an arbitrary multiset (also used for flip simulation).
pub fn check_property(
    property: Property,
    points: &[Point],
    segments: &BTreeMap<SegKey, u32>,
) -> Result<(), ModelError> {
    let mut deg = vec![0u32; points.len()];
    for (&(a, b), &m) in segments {
        deg[a as usize] += m;
        deg[b as usize] += m;
    }
    let fail = |msg: String| Err(ModelError::PropertyViolation(property, msg));
    match property {
        Property::Multigraph => Ok(()),
        Property::Matching | Property::RedblueMatching => {
            if let Some(i) = deg.iter().position(|&d| d > 1) {
                return fail(format!("point {i} has degree {}", deg[i]));
            }
            if property == Property::RedblueMatching {
                for &(a, b) in segments.keys() {
                    let (ca, cb) = (points[a as usize].color, points[b as usize].color);
                    match (ca, cb) {
                        (Some(x), Some(y)) if x != y => {}
                        _ => {
                            return fail(format!(
                                "segment {a}-{b} does not join a red and a blue point"
                            ))
                        }
                    }
                }
            }
            Ok(())
        }
        Property::Tour => {
            let n: usize = segments.values().map(|&m| m as usize).sum();
            if n != points.len() {
                return fail(format!("{} segments for {} points", n, points.len()));
            }
            if let Some(i) = deg.iter().position(|&d| d != 2) {
                return fail(format!("point {i} has degree {}", deg[i]));
            }
            if !connected(points.len(), segments) {
                return fail("not a single cycle".into());
            }
            Ok(())
        }
        Property::Tree => {
            let n: usize = segments.values().map(|&m| m as usize).sum();
            if n + 1 != points.len() {
                return fail(format!("{} segments for {} points", n, points.len()));
            }
            if segments.values().any(|&m| m > 1) {
                return fail("repeated edge".into());
            }
            if !connected(points.len(), segments) {
                return fail("not connected".into());
            }
            Ok(())
        }
    }
}

fn connected(n_points: usize, segments: &BTreeMap<SegKey, u32>) -> bool {
    if n_points == 0 {
        return true;
    }
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n_points];
    for &(a, b) in segments.keys() {
        adj[a as usize].push(b);
        adj[b as usize].push(a);
    }
    let mut seen = vec![false; n_points];
    let mut stack = vec![0u32];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v as usize] {
            if !seen[w as usize] {
                seen[w as usize] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// One flip: the removed crossing pair, the inserted reconnection, and a
/// strategy/phase tag.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlipEvent {
    pub removed: (SegKey, SegKey),
    pub inserted: (SegKey, SegKey),
    pub tag: String,
}

impl FlipEvent {
    pub fn new(removed: (SegKey, SegKey), inserted: (SegKey, SegKey), tag: impl Into<String>) -> Self {
        FlipEvent {
            removed: order_pair(removed.0, removed.1),
            inserted: order_pair(inserted.0, inserted.1),
            tag: tag.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Invalid { reason: String, index: usize },
}

impl Serialize for Verdict {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Verdict::Valid => s.serialize_str("valid"),
            Verdict::Invalid { reason, index } => {
                s.serialize_str(&format!("invalid[{index}]: {reason}"))
            }
        }
    }
}

impl<'de> Deserialize<'de> for Verdict {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "valid" {
            return Ok(Verdict::Valid);
        }
        let rest = s
            .strip_prefix("invalid[")
            .ok_or_else(|| serde::de::Error::custom("bad verdict"))?;
        let (idx, reason) = rest
            .split_once("]: ")
            .ok_or_else(|| serde::de::Error::custom("bad verdict"))?;
        Ok(Verdict::Invalid {
            index: idx.parse().map_err(serde::de::Error::custom)?,
            reason: reason.to_string(),
        })
    }
}

/// Per-event potential snapshots (embedded in trace JSON when requested).
pub type StepSnapshot = Vec<PotentialReport>;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UntangleTrace {
    pub instance: Instance,
    pub events: Vec<FlipEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<Vec<StepSnapshot>>,
    pub verdict: Verdict,
}

impl UntangleTrace {
    /// Replays the trace through `apply_flip`; Valid requires a crossing-free
    /// final state.
    pub fn validate(&self) -> Verdict {
        let mut state = self.instance.clone();
        for (i, ev) in self.events.iter().enumerate() {
            match state.apply_flip(ev) {
                Ok(next) => state = next,
                Err(e) => {
                    return Verdict::Invalid {
                        reason: e.to_string(),
                        index: i,
                    }
                }
            }
        }
        if !state.is_crossing_free() {
            return Verdict::Invalid {
                reason: "final state has crossings".into(),
                index: self.events.len(),
            };
        }
        Verdict::Valid
    }

    pub fn final_state(&self) -> Result<Instance, ModelError> {
        let mut state = self.instance.clone();
        for ev in &self.events {
            state = state.apply_flip(ev)?;
        }
        Ok(state)
    }
}

#[allow(unused)]
fn color_of(points: &[Point], id: u32) -> Option<Color> {
    points[id as usize].color
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(id: u32, x: i64, y: i64) -> Point {
        Point::new(id, x, y)
    }

    fn doc(points: Vec<Point>, segments: Vec<[u32; 2]>, property: Property) -> InstanceDoc {
        InstanceDoc {
            points,
            segments,
            property,
            geometry_class: None,
            convex_ids: None,
            t_ids: None,
        }
    }

    fn square() -> Vec<Point> {
        vec![pt(0, 0, 0), pt(1, 10, 0), pt(2, 10, 10), pt(3, 0, 10)]
    }

    #[test]
    fn load_crossing_diagonals_matching() {
        let inst = load_instance(doc(square(), vec![[0, 2], [1, 3]], Property::Matching)).unwrap();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.t_segments(), 0);
        assert_eq!(inst.geometry_class, GeometryClass::Convex);
        assert_eq!(inst.crossing_pairs(), vec![((0, 2), (1, 3))]);
    }

    #[test]
    fn load_rejects_bad_degrees() {
        let pts = vec![pt(0, 0, 0), pt(1, 40, 3), pt(2, 37, 39), pt(3, 3, 41), pt(4, 17, 20)];
        let star = doc(
            pts.clone(),
            vec![[1, 0], [1, 2], [1, 3], [1, 4], [2, 3]],
            Property::Tour,
        );
        assert!(matches!(
            load_instance(star),
            Err(ModelError::PropertyViolation(Property::Tour, _))
        ));
        let bad_matching = doc(square(), vec![[0, 1], [1, 2]], Property::Matching);
        assert!(matches!(
            load_instance(bad_matching),
            Err(ModelError::PropertyViolation(Property::Matching, _))
        ));
    }

    #[test]
    fn load_rejects_collinear_and_duplicates() {
        let collinear = doc(
            vec![pt(0, 0, 0), pt(1, 5, 5), pt(2, 10, 10), pt(3, 2, 9)],
            vec![],
            Property::Multigraph,
        );
        assert!(matches!(
            load_instance(collinear),
            Err(ModelError::GeneralPosition(_))
        ));
        let dup = doc(
            vec![pt(0, 0, 0), pt(1, 0, 0)],
            vec![],
            Property::Multigraph,
        );
        assert!(matches!(load_instance(dup), Err(ModelError::GeneralPosition(_))));
        let big = doc(vec![pt(0, 1 << 31, 0)], vec![], Property::Multigraph);
        assert!(matches!(load_instance(big), Err(ModelError::CoordinateOverflow(_))));
    }

    #[test]
    fn hexagon_diagonals_cross_pairwise() {
        let pts: Vec<Point> = (0..6)
            .map(|i| {
                let a = std::f64::consts::PI / 3.0 * i as f64 + 0.1;
                pt(i, (1000.0 * a.cos()) as i64, (1000.0 * a.sin()) as i64)
            })
            .collect();
        let inst = load_instance(doc(pts, vec![[0, 3], [1, 4], [2, 5]], Property::Multigraph)).unwrap();
        assert_eq!(inst.crossing_pairs().len(), 3);
    }

    #[test]
    fn insertions_matching_both() {
        let inst = load_instance(doc(square(), vec![[0, 2], [1, 3]], Property::Matching)).unwrap();
        let ins = inst.legal_insertions((0, 2), (1, 3)).unwrap();
        assert_eq!(ins, vec![((0, 1), (2, 3)), ((0, 3), (1, 2))]);
    }

    #[test]
    fn insertions_tour_exactly_one() {
        // Tour visiting 0-2-1-3: both diagonals present and crossing.
        let inst = load_instance(doc(
            square(),
            vec![[0, 2], [2, 1], [1, 3], [3, 0]],
            Property::Tour,
        ))
        .unwrap();
        let ins = inst.legal_insertions((0, 2), (1, 3)).unwrap();
        assert_eq!(ins, vec![((0, 1), (2, 3))]);
        let ev = FlipEvent::new(((0, 2), (1, 3)), ins[0], "test");
        let next = inst.apply_flip(&ev).unwrap();
        assert!(next.is_crossing_free());
        assert!(next.check_property().is_ok());
    }

    #[test]
    fn insertions_redblue_color_forced() {
        let mut pts = vec![pt(0, 0, 0), pt(1, 10, 10), pt(2, 10, 1), pt(3, 0, 9)];
        pts[0].color = Some(Color::Red);
        pts[1].color = Some(Color::Blue);
        pts[2].color = Some(Color::Red);
        pts[3].color = Some(Color::Blue);
        let inst =
            load_instance(doc(pts, vec![[0, 1], [2, 3]], Property::RedblueMatching)).unwrap();
        let ins = inst.legal_insertions((0, 1), (2, 3)).unwrap();
        assert_eq!(ins, vec![((0, 3), (1, 2))]);
    }

    #[test]
    fn apply_flip_rejections() {
        let inst = load_instance(doc(square(), vec![[0, 2], [1, 3]], Property::Matching)).unwrap();
        // Inserted pair that crosses (re-inserting the diagonals swapped).
        let cross_ev = FlipEvent::new(((0, 2), (1, 3)), ((0, 2), (1, 3)), "t");
        assert!(inst.apply_flip(&cross_ev).is_err());
        // Non-crossing removal.
        let flat = load_instance(doc(square(), vec![[0, 1], [2, 3]], Property::Matching)).unwrap();
        let ev = FlipEvent::new(((0, 1), (2, 3)), ((0, 2), (1, 3)), "t");
        let err = flat.apply_flip(&ev).unwrap_err();
        assert!(err.to_string().contains("does not cross"));
        // Wrong endpoint set.
        let pts5 = vec![pt(0, 0, 0), pt(1, 10, 0), pt(2, 10, 10), pt(3, 0, 10), pt(4, 30, 5)];
        let inst5 =
            load_instance(doc(pts5, vec![[0, 2], [1, 3]], Property::Multigraph)).unwrap();
        let ev = FlipEvent::new(((0, 2), (1, 3)), ((0, 1), (2, 4)), "t");
        assert!(inst5.apply_flip(&ev).is_err());
    }

    #[test]
    fn split_two_far_crossings() {
        // Convex octagon; left quad {0,1,6,7} and right quad {2,3,4,5} are
        // x-separated, each carrying one X-crossing.
        let pts: Vec<Point> = [
            (0i64, 0i64), (10, -3), (100, -5), (110, 0),
            (111, 9), (101, 13), (10, 14), (0, 10),
        ]
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| pt(i as u32, x, y))
        .collect();
        let inst = load_instance(doc(
            pts,
            vec![[0, 6], [1, 7], [2, 4], [3, 5]],
            Property::Matching,
        ))
        .unwrap();
        let parts = inst.split_components();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].n(), 2);
        assert_eq!(parts[1].n(), 2);
    }

    #[test]
    fn uncrossable_hull_edge() {
        let pts: Vec<Point> = (0..6)
            .map(|i| {
                let a = std::f64::consts::PI / 3.0 * i as f64 + 0.1;
                pt(i, (1000.0 * a.cos()) as i64, (1000.0 * a.sin()) as i64)
            })
            .collect();
        let inst =
            load_instance(doc(pts, vec![[0, 1], [0, 3]], Property::Multigraph)).unwrap();
        assert!(inst.is_uncrossable((0, 1))); // hull edge
        assert!(!inst.is_uncrossable((0, 3))); // long diagonal
    }

    #[test]
    fn trace_validation_and_json_roundtrip() {
        let inst = load_instance(doc(square(), vec![[0, 2], [1, 3]], Property::Matching)).unwrap();
        let trace = UntangleTrace {
            instance: inst.clone(),
            events: vec![FlipEvent::new(((0, 2), (1, 3)), ((0, 1), (2, 3)), "x")],
            snapshots: None,
            verdict: Verdict::Valid,
        };
        assert_eq!(trace.validate(), Verdict::Valid);
        let js = serde_json::to_string(&trace).unwrap();
        assert!(js.contains("\"verdict\":\"valid\""));
        let back: UntangleTrace = serde_json::from_str(&js).unwrap();
        assert_eq!(back.events, trace.events);
        assert_eq!(back.instance, trace.instance);
        // An invalid trace reports the failing index.
        let bad = UntangleTrace {
            events: vec![FlipEvent::new(((0, 2), (1, 3)), ((0, 2), (1, 3)), "x")],
            ..trace
        };
        match bad.validate() {
            Verdict::Invalid { index, .. } => assert_eq!(index, 0),
            v => panic!("expected invalid, got {v:?}"),
        }
    }

    #[test]
    fn degree_sequence_invariant() {
        let inst = load_instance(doc(
            square(),
            vec![[0, 2], [2, 1], [1, 3], [3, 0]],
            Property::Tour,
        ))
        .unwrap();
        let ev = FlipEvent::new(((0, 2), (1, 3)), ((0, 1), (2, 3)), "t");
        let next = inst.apply_flip(&ev).unwrap();
        assert_eq!(inst.degrees(), next.degrees());
    }
}
