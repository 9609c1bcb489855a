//! Seeded instance generators for every geometry class, plus two constructed
//! families: a maximally-crossing tour for quadratic-growth stress tests and
//! a single-T-segment fan for farthest-first counting checks.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Color, Point};
use crate::model::{load_instance, GeometryClass, Instance, InstanceDoc, ModelError, Property};

pub const DEFAULT_RADIUS: i64 = 1_000_000;

fn default_radius() -> i64 {
    DEFAULT_RADIUS
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub class: GeometryClass,
    pub property: Property,
    /// Number of segments (with multiplicity).
    pub n: usize,
    /// Number of non-convex points.
    #[serde(default)]
    pub t: usize,
    pub seed: u64,
    #[serde(default = "default_radius")]
    pub radius: i64,
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("infeasible generator spec: {0}")]
    Infeasible(String),
    #[error("generation failed after {attempts} attempts, last error: {last}")]
    Exhausted { attempts: usize, last: ModelError },
}

const MAX_ATTEMPTS: usize = 400;

/// Number of points implied by the property and segment count.
fn point_count(property: Property, n: usize) -> Result<usize, GenError> {
    match property {
        Property::Matching | Property::RedblueMatching => Ok(2 * n),
        Property::Tour => {
            if n < 3 {
                return Err(GenError::Infeasible("a tour needs at least 3 segments".into()));
            }
            Ok(n)
        }
        Property::Tree => Ok(n + 1),
        Property::Multigraph => Ok(n.max(2)),
    }
}

fn check_t(class: GeometryClass, t: usize) -> Result<(), GenError> {
    let bad = |msg: &str| Err(GenError::Infeasible(msg.into()));
    match class {
        GeometryClass::Convex if t != 0 => bad("convex class needs t = 0"),
        GeometryClass::OneTPoint if t != 1 => bad("one_T_point class needs t = 1"),
        GeometryClass::TwoTInside if t != 2 => bad("two_T_inside class needs t = 2"),
        GeometryClass::OneInOneOut if t != 2 => bad("one_in_one_out class needs t = 2"),
        GeometryClass::TwoTOutside if !(1..=2).contains(&t) => {
            bad("two_T_outside class needs t in 1..=2")
        }
        GeometryClass::ParallelSeparated | GeometryClass::TOutsideHull if t == 0 => {
            bad("class needs at least one T point")
        }
        _ => Ok(()),
    }
}

/// Generates a valid instance of the requested class and property.
/// Deterministic for a fixed spec: retries consume the same seeded stream.
pub fn generate(spec: &GeneratorSpec) -> Result<Instance, GenError> {
    check_t(spec.class, spec.t)?;
    let m = point_count(spec.property, spec.n)?;
    if spec.t + 3 > m {
        return Err(GenError::Infeasible(format!(
            "{} points leave fewer than 3 convex points with t = {}",
            m, spec.t
        )));
    }
    let c_count = m - spec.t;
    let r = spec.radius as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut last = ModelError::BadIds;
    for _ in 0..MAX_ATTEMPTS {
        // Convex points: jittered equally-spaced circle angles, exact after
        // rounding thanks to the angular separation at this radius.
        let mut points: Vec<Point> = (0..c_count)
            .map(|i| {
                let slot = std::f64::consts::TAU / c_count as f64;
                let a = (i as f64 + 0.1 + 0.8 * rng.gen::<f64>()) * slot;
                Point::new(i as u32, (r * a.cos()).round() as i64, (r * a.sin()).round() as i64)
            })
            .collect();
        let mut t_ids = Vec::new();
        for j in 0..spec.t {
            let id = (c_count + j) as u32;
            let a = rng.gen::<f64>() * std::f64::consts::TAU;
            enum Place {
                Inside,
                Outside,
                Separated(bool),
            }
            let place = match spec.class {
                GeometryClass::Convex => unreachable!("t = 0"),
                GeometryClass::OneTPoint | GeometryClass::TwoTInside => Place::Inside,
                GeometryClass::TwoTOutside | GeometryClass::TOutsideHull => Place::Outside,
                GeometryClass::OneInOneOut => {
                    if j == 0 {
                        Place::Inside
                    } else {
                        Place::Outside
                    }
                }
                GeometryClass::ParallelSeparated => Place::Separated(j % 2 == 0),
                GeometryClass::General => {
                    if rng.gen::<bool>() {
                        Place::Inside
                    } else {
                        Place::Outside
                    }
                }
            };
            let (x, y) = match place {
                Place::Inside => {
                    let rho = r * (0.1 + 0.4 * rng.gen::<f64>());
                    (rho * a.cos(), rho * a.sin())
                }
                Place::Outside => {
                    let rho = r * (1.3 + 0.7 * rng.gen::<f64>());
                    (rho * a.cos(), rho * a.sin())
                }
                Place::Separated(up) => {
                    let y = r * (1.3 + 0.7 * rng.gen::<f64>()) * if up { 1.0 } else { -1.0 };
                    (r * (2.0 * rng.gen::<f64>() - 1.0), y)
                }
            };
            points.push(Point::new(id, x.round() as i64, y.round() as i64));
            t_ids.push(id);
        }
        let segments = sample_segments(&mut rng, spec.property, spec.n, m);
        if spec.property == Property::RedblueMatching {
            for &[a, b] in &segments {
                points[a as usize].color = Some(Color::Red);
                points[b as usize].color = Some(Color::Blue);
            }
        }
        let doc = InstanceDoc {
            points,
            segments,
            property: spec.property,
            geometry_class: None,
            convex_ids: None,
            t_ids: Some(t_ids),
        };
        match load_instance(doc) {
            Ok(inst) => {
                if inst.check_geometry_class(spec.class).is_ok() {
                    return Ok(inst);
                }
                last = ModelError::BadIds; // class mismatch; resample
            }
            Err(e) => last = e,
        }
    }
    Err(GenError::Exhausted {
        attempts: MAX_ATTEMPTS,
        last,
    })
}

fn sample_segments(
    rng: &mut ChaCha8Rng,
    property: Property,
    n: usize,
    m: usize,
) -> Vec<[u32; 2]> {
    let mut ids: Vec<u32> = (0..m as u32).collect();
    match property {
        Property::Matching | Property::RedblueMatching => {
            ids.shuffle(rng);
            ids.chunks_exact(2).map(|c| [c[0], c[1]]).collect()
        }
        Property::Tour => {
            ids.shuffle(rng);
            (0..m).map(|i| [ids[i], ids[(i + 1) % m]]).collect()
        }
        Property::Tree => {
            ids.shuffle(rng);
            (1..m)
                .map(|i| [ids[i], ids[rng.gen_range(0..i)]])
                .collect()
        }
        Property::Multigraph => (0..n)
            .map(|_| {
                let a = rng.gen_range(0..m as u32);
                let b = loop {
                    let b = rng.gen_range(0..m as u32);
                    if b != a {
                        break b;
                    }
                };
                [a, b]
            })
            .collect(),
    }
}

/// Maximally-crossing convex tour: visits the circle points with a stride of
/// roughly half the cycle length, so almost every pair of segments crosses
/// and the crossing count grows quadratically in n.
pub fn antipodal_tour(n: usize, seed: u64, radius: i64) -> Result<Instance, GenError> {
    if n < 5 {
        return Err(GenError::Infeasible("antipodal tour needs n >= 5".into()));
    }
    // Stride coprime with n near n/2 keeps the walk a single cycle.
    let mut step = n / 2;
    while num_integer::gcd(step, n) != 1 {
        step -= 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = radius as f64;
    let mut last = ModelError::BadIds;
    for _ in 0..MAX_ATTEMPTS {
        let points: Vec<Point> = (0..n)
            .map(|i| {
                let slot = std::f64::consts::TAU / n as f64;
                let a = (i as f64 + 0.1 + 0.8 * rng.gen::<f64>()) * slot;
                Point::new(i as u32, (r * a.cos()).round() as i64, (r * a.sin()).round() as i64)
            })
            .collect();
        let segments: Vec<[u32; 2]> = (0..n)
            .map(|i| {
                let a = (i * step % n) as u32;
                let b = ((i + 1) * step % n) as u32;
                [a, b]
            })
            .collect();
        let doc = InstanceDoc {
            points,
            segments,
            property: Property::Tour,
            geometry_class: None,
            convex_ids: None,
            t_ids: Some(Vec::new()),
        };
        match load_instance(doc) {
            Ok(inst) => return Ok(inst),
            Err(e) => last = e,
        }
    }
    Err(GenError::Exhausted {
        attempts: MAX_ATTEMPTS,
        last,
    })
}

/// Shifted star matching on red/blue circle points: segment i joins red
/// point i to blue point n+i, so all n(n-1)/2 pairs cross, and the color
/// constraint forces the nested reconnection at every flip, which removes
/// exactly one crossing. Any untangle sequence therefore takes a quadratic
/// number of flips.
pub fn redblue_star_matching(n: usize, seed: u64, radius: i64) -> Result<Instance, GenError> {
    if n < 2 {
        return Err(GenError::Infeasible("star matching needs n >= 2 segments".into()));
    }
    let m = 2 * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = radius as f64;
    let mut last = ModelError::BadIds;
    for _ in 0..MAX_ATTEMPTS {
        let points: Vec<Point> = (0..m)
            .map(|i| {
                let slot = std::f64::consts::TAU / m as f64;
                let a = (i as f64 + 0.1 + 0.8 * rng.gen::<f64>()) * slot;
                let mut p = Point::new(
                    i as u32,
                    (r * a.cos()).round() as i64,
                    (r * a.sin()).round() as i64,
                );
                p.color = Some(if i < n { Color::Red } else { Color::Blue });
                p
            })
            .collect();
        let segments: Vec<[u32; 2]> = (0..n).map(|i| [i as u32, (i + n) as u32]).collect();
        let doc = InstanceDoc {
            points,
            segments,
            property: Property::RedblueMatching,
            geometry_class: None,
            convex_ids: None,
            t_ids: Some(Vec::new()),
        };
        match load_instance(doc) {
            Ok(inst) => return Ok(inst),
            Err(e) => last = e,
        }
    }
    Err(GenError::Exhausted {
        attempts: MAX_ATTEMPTS,
        last,
    })
}

/// Single-T-segment fan: one interior point q whose only segment crosses all
/// n-1 parallel chords, which are mutually crossing-free. Every crossing
/// involves the q-segment, matching the farthest-first preconditions.
pub fn farthest_first_instance(n: usize, seed: u64, radius: i64) -> Result<Instance, GenError> {
    if n < 2 {
        return Err(GenError::Infeasible("fan needs n >= 2 segments".into()));
    }
    let chords = n - 1;
    let r = radius as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last = ModelError::BadIds;
    for _ in 0..MAX_ATTEMPTS {
        let mut points = Vec::new();
        let mut segments = Vec::new();
        // Horizontal chords of the upper half-circle at increasing heights.
        for i in 0..chords {
            let theta = (0.15 + 0.7 * (i as f64 + 0.5) / chords as f64)
                * std::f64::consts::FRAC_PI_2;
            let jx = |rng: &mut ChaCha8Rng| rng.gen_range(-3i64..=3);
            let (x, y) = (r * theta.cos(), r * theta.sin());
            let l = points.len() as u32;
            points.push(Point::new(l, -(x.round() as i64) + jx(&mut rng), y.round() as i64));
            points.push(Point::new(l + 1, x.round() as i64 + jx(&mut rng), y.round() as i64 + 1));
            segments.push([l, l + 1]);
        }
        // Apex on the circle above all chords, bottom vertex to keep q in
        // the hull, and q below all chords.
        let apex = points.len() as u32;
        points.push(Point::new(apex, rng.gen_range(-3i64..=3), radius));
        let bottom = points.len() as u32;
        points.push(Point::new(bottom, rng.gen_range(-3i64..=3), -radius));
        let q = points.len() as u32;
        points.push(Point::new(
            q,
            rng.gen_range(-3i64..=3) + 7,
            -(r * 0.5).round() as i64,
        ));
        segments.push([q, apex]);
        let doc = InstanceDoc {
            points,
            segments,
            property: Property::Matching,
            geometry_class: None,
            convex_ids: None,
            t_ids: Some(vec![q]),
        };
        match load_instance(doc) {
            Ok(inst) => {
                // Certify the construction: all crossings involve (q, apex).
                let key = crate::model::seg(q, apex);
                if inst.crossing_pairs().iter().all(|&(a, b)| a == key || b == key)
                    && inst.seg_crosses(key, (0, 1)) == (chords > 0)
                {
                    return Ok(inst);
                }
                last = ModelError::BadIds;
            }
            Err(e) => last = e,
        }
    }
    Err(GenError::Exhausted {
        attempts: MAX_ATTEMPTS,
        last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_valid() {
        let spec = GeneratorSpec {
            class: GeometryClass::Convex,
            property: Property::Matching,
            n: 8,
            t: 0,
            seed: 1,
            radius: DEFAULT_RADIUS,
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
        assert!(a.check_property().is_ok());
        assert_eq!(a.n(), 8);
    }

    #[test]
    fn classes_and_properties() {
        for (class, property, n, t) in [
            (GeometryClass::OneTPoint, Property::Multigraph, 10, 1),
            (GeometryClass::TwoTInside, Property::Tour, 9, 2),
            (GeometryClass::TwoTOutside, Property::Matching, 8, 2),
            (GeometryClass::OneInOneOut, Property::Multigraph, 8, 2),
            (GeometryClass::ParallelSeparated, Property::Matching, 8, 3),
            (GeometryClass::TOutsideHull, Property::Matching, 8, 3),
        ] {
            let spec = GeneratorSpec {
                class,
                property,
                n,
                t,
                seed: 7,
                radius: DEFAULT_RADIUS,
            };
            let inst = generate(&spec).unwrap_or_else(|e| panic!("{class:?}: {e}"));
            assert!(inst.check_geometry_class(class).is_ok());
            assert_eq!(inst.t_ids.len(), t);
        }
    }

    #[test]
    fn antipodal_tour_crosses_quadratically() {
        let inst = antipodal_tour(33, 5, DEFAULT_RADIUS).unwrap();
        let crossings = inst.crossing_pairs().len();
        assert!(crossings * 8 >= 33 * 30, "only {crossings} crossings");
    }

    #[test]
    fn star_matching_crosses_completely_and_forces_insertions() {
        let inst = redblue_star_matching(12, 5, DEFAULT_RADIUS).unwrap();
        assert_eq!(inst.crossing_pairs().len(), 12 * 11 / 2);
        let (s1, s2) = inst.crossing_pairs()[0];
        assert_eq!(inst.legal_insertions(s1, s2).unwrap().len(), 1);
    }

    #[test]
    fn fan_has_single_crossing_segment() {
        let inst = farthest_first_instance(12, 3, DEFAULT_RADIUS).unwrap();
        assert_eq!(inst.t_ids.len(), 1);
        let pairs = inst.crossing_pairs();
        assert_eq!(pairs.len(), 11);
    }
}
