//! Untangle strategies: deterministic procedures from a precondition-checked
//! instance to a validated trace.

use std::collections::HashMap;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use crate::engine::Engine;
use crate::geometry::{crossing_point, RatPoint};
use crate::model::{Instance, ModelError, SegKey, UntangleTrace};

pub mod baseline;
pub mod convex;
pub mod libline;
pub mod one_in_one_out;
pub mod one_point;
pub mod outside_ri;
pub mod separated;
pub mod two_inside;
pub mod two_outside;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StrategyId {
    BaselineNoclice,
    ConvexInsertion,
    SeparatedInsertion,
    ConvexRemoval,
    FarthestFirst,
    OnePointRemoval,
    TwoOutsideRemoval,
    TwoInsideRemoval,
    OneInOneOutRemoval,
    SeparatedRemovalInsertion,
    LiberateLine,
    OutsideMatchingRi,
}

pub const ALL_STRATEGIES: [StrategyId; 12] = [
    StrategyId::BaselineNoclice,
    StrategyId::ConvexInsertion,
    StrategyId::SeparatedInsertion,
    StrategyId::ConvexRemoval,
    StrategyId::FarthestFirst,
    StrategyId::OnePointRemoval,
    StrategyId::TwoOutsideRemoval,
    StrategyId::TwoInsideRemoval,
    StrategyId::OneInOneOutRemoval,
    StrategyId::SeparatedRemovalInsertion,
    StrategyId::LiberateLine,
    StrategyId::OutsideMatchingRi,
];

impl StrategyId {
    pub fn as_str(&self) -> &'static str {
        match self {
            StrategyId::BaselineNoclice => "baseline_noclice",
            StrategyId::ConvexInsertion => "convex_insertion",
            StrategyId::SeparatedInsertion => "separated_insertion",
            StrategyId::ConvexRemoval => "convex_removal",
            StrategyId::FarthestFirst => "farthest_first",
            StrategyId::OnePointRemoval => "one_point_removal",
            StrategyId::TwoOutsideRemoval => "two_outside_removal",
            StrategyId::TwoInsideRemoval => "two_inside_removal",
            StrategyId::OneInOneOutRemoval => "one_in_one_out_removal",
            StrategyId::SeparatedRemovalInsertion => "separated_removal_insertion",
            StrategyId::LiberateLine => "liberate_line",
            StrategyId::OutsideMatchingRi => "outside_matching_RI",
        }
    }
}

impl std::fmt::Display for StrategyId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl serde::Serialize for StrategyId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> serde::Deserialize<'de> for StrategyId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for StrategyId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ALL_STRATEGIES
            .iter()
            .find(|id| id.as_str() == s)
            .copied()
            .ok_or_else(|| format!("unknown strategy {s:?}"))
    }
}

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl From<ModelError> for StrategyError {
    fn from(e: ModelError) -> Self {
        StrategyError::Internal(e.to_string())
    }
}

pub(crate) fn pre(msg: impl Into<String>) -> StrategyError {
    StrategyError::Precondition(msg.into())
}

pub(crate) fn internal(msg: impl Into<String>) -> StrategyError {
    StrategyError::Internal(msg.into())
}

/// Runs a strategy on an instance and returns the finished trace.
pub fn run_strategy(
    id: StrategyId,
    inst: &Instance,
    snapshots: bool,
) -> Result<UntangleTrace, StrategyError> {
    let mut eng = Engine::new(inst.clone(), snapshots);
    match id {
        StrategyId::BaselineNoclice => baseline::run(&mut eng)?,
        StrategyId::ConvexInsertion => convex::insertion(&mut eng)?,
        StrategyId::ConvexRemoval => convex::removal(&mut eng)?,
        StrategyId::SeparatedInsertion => separated::insertion(&mut eng)?,
        StrategyId::SeparatedRemovalInsertion => separated::removal_insertion(&mut eng)?,
        StrategyId::FarthestFirst => one_point::farthest_first_strategy(&mut eng)?,
        StrategyId::OnePointRemoval => one_point::run(&mut eng)?,
        StrategyId::TwoOutsideRemoval => two_outside::run(&mut eng, two_outside::DEFAULT_T_CAP)?,
        StrategyId::TwoInsideRemoval => two_inside::run(&mut eng)?,
        StrategyId::OneInOneOutRemoval => one_in_one_out::run(&mut eng)?,
        StrategyId::LiberateLine => libline::run(&mut eng)?,
        StrategyId::OutsideMatchingRi => outside_ri::run(&mut eng)?,
    }
    if eng.has_crossings() {
        return Err(internal(format!(
            "{id} finished with crossings remaining"
        )));
    }
    Ok(eng.into_trace())
}

/// Symbolic flip budget for a strategy, evaluated on instance parameters.
pub struct BoundModel {
    pub formula: &'static str,
}

/// Convex budget substitute used wherever a bound quotes d_conv(n).
pub fn d_conv(n: f64, c: f64) -> f64 {
    (n * (c.max(2.0).log2().floor() + 1.0)).max(1.0)
}

impl BoundModel {
    pub fn for_strategy(id: StrategyId) -> BoundModel {
        let formula = match id {
            StrategyId::BaselineNoclice => "n^2",
            StrategyId::ConvexInsertion => "n*log_{4/3}(|C|)+1",
            StrategyId::ConvexRemoval => "n*(floor(log2|C|)+1)",
            StrategyId::SeparatedInsertion => "t*|P|*log2|C| + n*log2|C| + 1",
            StrategyId::SeparatedRemovalInsertion => "n + t*|P|",
            StrategyId::FarthestFirst => "n",
            StrategyId::OnePointRemoval => "d_conv(n) + t*n",
            StrategyId::TwoOutsideRemoval => "2^t * d_conv(n)",
            StrategyId::TwoInsideRemoval => "d_conv(n) + t*n",
            StrategyId::OneInOneOutRemoval => "d_conv(n) + t^2*n",
            StrategyId::LiberateLine => "n*(log2|C|+4) + 2",
            StrategyId::OutsideMatchingRi => "(t+1)^3 * n * (log2|C|+1)",
        };
        BoundModel { formula }
    }

    pub fn eval(&self, id: StrategyId, n: usize, t: usize, p: usize, c: usize) -> f64 {
        let (n, t, p, c) = (n as f64, t as f64, p as f64, c as f64);
        let lg = c.max(2.0).log2();
        let v = match id {
            StrategyId::BaselineNoclice => n * n,
            StrategyId::ConvexInsertion => n * lg / (4.0f64 / 3.0).log2() + 1.0,
            StrategyId::ConvexRemoval => n * (lg.floor() + 1.0),
            StrategyId::SeparatedInsertion => t * p * lg + n * lg + 1.0,
            StrategyId::SeparatedRemovalInsertion => n + t * p,
            StrategyId::FarthestFirst => n,
            StrategyId::OnePointRemoval => d_conv(n, c) + t * n,
            StrategyId::TwoOutsideRemoval => 2.0f64.powf(t) * d_conv(n, c),
            StrategyId::TwoInsideRemoval => d_conv(n, c) + t * n,
            StrategyId::OneInOneOutRemoval => d_conv(n, c) + t * t * n,
            StrategyId::LiberateLine => n * (lg + 4.0) + 2.0,
            StrategyId::OutsideMatchingRi => (t + 1.0).powi(3) * n * (lg + 1.0),
        };
        v.max(1.0)
    }
}

// ---------------------------------------------------------------------------
// Shared geometric helpers for strategy code.
// ---------------------------------------------------------------------------

/// Map from point id to its position in the canonical CCW order of C.
pub(crate) fn ccw_positions(inst: &Instance) -> HashMap<u32, usize> {
    inst.convex_ids
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, i))
        .collect()
}

/// Parameter in (0, 1) of the crossing point of `other` along segment `s`,
/// measured from endpoint `from` of `s`. Exact rational.
pub(crate) fn crossing_param(inst: &Instance, s: SegKey, from: u32, other: SegKey) -> BigRational {
    let a = inst.point(from);
    let b = inst.point(if s.0 == from { s.1 } else { s.0 });
    debug_assert!(s.0 == from || s.1 == from);
    let (c, d) = inst.seg_points(other);
    let big = |v: i64| BigInt::from(v);
    let denom = BigRational::from(
        big(b.x - a.x) * big(d.y - c.y) - big(b.y - a.y) * big(d.x - c.x),
    );
    let numer = BigRational::from(
        big(c.x - a.x) * big(d.y - c.y) - big(c.y - a.y) * big(d.x - c.x),
    );
    numer / denom
}

/// Exact crossing point of two crossing segments.
pub(crate) fn crossing_rat_point(inst: &Instance, s1: SegKey, s2: SegKey) -> RatPoint {
    let (a, b) = inst.seg_points(s1);
    let (c, d) = inst.seg_points(s2);
    crossing_point(a, b, c, d)
}
