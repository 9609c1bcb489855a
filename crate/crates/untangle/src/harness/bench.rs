//! Batch benchmark runner: sweeps generator specs x strategies, validates
//! every trace with both validators, and reports flip counts against the
//! per-strategy bound formulas (fitted constant = max observed ratio).

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Instance, UntangleTrace, Verdict};
use crate::oracle;
use crate::strategies::{run_strategy, BoundModel, StrategyError, StrategyId};

use super::gen::{generate, GenError, GeneratorSpec};

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub strategy: String,
    pub class: String,
    pub property: String,
    pub seed: u64,
    pub n: usize,
    pub t: usize,
    pub points: usize,
    pub convex: usize,
    pub crossings: usize,
    pub flips: usize,
    pub wall_ms: f64,
    pub bound: f64,
    pub ratio: f64,
    /// Empty on success; precondition mismatches are reported, not skipped.
    pub error: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchConfig {
    pub specs: Vec<GeneratorSpec>,
    pub strategies: Vec<StrategyId>,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("generation failed for seed {seed}: {source}")]
    Gen { seed: u64, source: GenError },
    #[error("invalid trace for {strategy} on seed {seed}: {reason}")]
    InvalidTrace {
        strategy: StrategyId,
        seed: u64,
        reason: String,
    },
    #[error("internal strategy failure for {strategy} on seed {seed}: {source}")]
    Internal {
        strategy: StrategyId,
        seed: u64,
        source: StrategyError,
    },
}

/// Runs one strategy on one instance: the trace is checked by both the
/// replay validator and the independent oracle validator before a row is
/// emitted.
pub fn run_one(
    strategy: StrategyId,
    inst: &Instance,
    snapshots: bool,
) -> Result<(UntangleTrace, BenchRow), StrategyError> {
    let crossings = inst.crossing_pairs().len();
    let start = Instant::now();
    let trace = run_strategy(strategy, inst, snapshots)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    if let Verdict::Invalid { reason, index } = trace.validate() {
        return Err(StrategyError::Internal(format!(
            "replay validator rejected flip {index}: {reason}"
        )));
    }
    if let Verdict::Invalid { reason, index } = oracle::validate_trace(&trace) {
        return Err(StrategyError::Internal(format!(
            "oracle validator rejected flip {index}: {reason}"
        )));
    }
    let (n, t) = (inst.n(), inst.t_ids.len());
    let (points, convex) = (inst.points.len(), inst.convex_ids.len());
    let bound = BoundModel::for_strategy(strategy).eval(strategy, n, t, points, convex);
    let flips = trace.events.len();
    let row = BenchRow {
        strategy: strategy.to_string(),
        class: format!("{:?}", inst.geometry_class),
        property: format!("{:?}", inst.property),
        seed: 0,
        n,
        t,
        points,
        convex,
        crossings,
        flips,
        wall_ms,
        bound,
        ratio: flips as f64 / bound,
        error: String::new(),
    };
    Ok((trace, row))
}

/// Sweeps the config. Returns all rows (including explicit precondition
/// error rows) plus a per-strategy summary of the fitted constants. Any
/// invalid trace aborts the sweep naming the offending seed.
pub fn bench(config: &BenchConfig) -> Result<(Vec<BenchRow>, String), BenchError> {
    let tasks: Vec<(GeneratorSpec, StrategyId)> = config
        .specs
        .iter()
        .flat_map(|s| config.strategies.iter().map(move |&st| (s.clone(), st)))
        .collect();
    let rows: Vec<BenchRow> = tasks
        .par_iter()
        .map(|(spec, strategy)| -> Result<BenchRow, BenchError> {
            let inst = generate(spec).map_err(|source| BenchError::Gen {
                seed: spec.seed,
                source,
            })?;
            match run_one(*strategy, &inst, false) {
                Ok((_, mut row)) => {
                    row.seed = spec.seed;
                    Ok(row)
                }
                Err(StrategyError::Precondition(msg)) => Ok(BenchRow {
                    strategy: strategy.to_string(),
                    class: format!("{:?}", inst.geometry_class),
                    property: format!("{:?}", inst.property),
                    seed: spec.seed,
                    n: inst.n(),
                    t: inst.t_ids.len(),
                    points: inst.points.len(),
                    convex: inst.convex_ids.len(),
                    crossings: inst.crossing_pairs().len(),
                    flips: 0,
                    wall_ms: 0.0,
                    bound: 0.0,
                    ratio: 0.0,
                    error: msg,
                }),
                Err(e @ StrategyError::Internal(_)) => {
                    let reason = e.to_string();
                    if reason.contains("validator rejected") {
                        Err(BenchError::InvalidTrace {
                            strategy: *strategy,
                            seed: spec.seed,
                            reason,
                        })
                    } else {
                        Err(BenchError::Internal {
                            strategy: *strategy,
                            seed: spec.seed,
                            source: e,
                        })
                    }
                }
            }
        })
        .collect::<Result<_, _>>()?;
    let text = summary(&rows);
    Ok((rows, text))
}

fn summary(rows: &[BenchRow]) -> String {
    let mut lines = Vec::new();
    let mut strategies: Vec<&str> = rows.iter().map(|r| r.strategy.as_str()).collect();
    strategies.sort_unstable();
    strategies.dedup();
    for s in strategies {
        let ok: Vec<&BenchRow> = rows
            .iter()
            .filter(|r| r.strategy == s && r.error.is_empty())
            .collect();
        let skipped = rows
            .iter()
            .filter(|r| r.strategy == s && !r.error.is_empty())
            .count();
        if ok.is_empty() {
            lines.push(format!("{s}: no successful runs ({skipped} precondition mismatches)"));
            continue;
        }
        let c = ok.iter().map(|r| r.ratio).fold(0.0f64, f64::max);
        let flips: usize = ok.iter().map(|r| r.flips).sum();
        lines.push(format!(
            "{s}: {} runs, {} total flips, fitted constant (max flips/bound) = {:.4}, {} precondition mismatches",
            ok.len(),
            flips,
            c,
            skipped
        ));
    }
    lines.join("\n")
}

/// Writes rows as CSV (header always present, even for an empty sweep).
pub fn write_csv<W: std::io::Write>(rows: &[BenchRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "strategy", "class", "property", "seed", "n", "t", "points", "convex",
            "crossings", "flips", "wall_ms", "bound", "ratio", "error",
        ])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Least-squares slope of log(flips) vs log(n): the fitted growth exponent.
pub fn fit_exponent(samples: &[(usize, usize)]) -> f64 {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|&&(n, f)| n > 0 && f > 0)
        .map(|&(n, f)| ((n as f64).ln(), (f as f64).ln()))
        .collect();
    let k = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (k * sxy - sx * sy) / (k * sxx - sx * sx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GeometryClass, Property};

    #[test]
    fn sweep_produces_rows_and_summary() {
        let config = BenchConfig {
            specs: (0..4)
                .map(|seed| GeneratorSpec {
                    class: GeometryClass::Convex,
                    property: Property::Matching,
                    n: 16,
                    t: 0,
                    seed,
                    radius: super::super::gen::DEFAULT_RADIUS,
                })
                .collect(),
            strategies: vec![StrategyId::ConvexInsertion, StrategyId::ConvexRemoval],
        };
        let (rows, summary) = bench(&config).unwrap();
        assert_eq!(rows.len(), 8);
        assert!(rows.iter().all(|r| r.error.is_empty()));
        assert!(summary.contains("convex_insertion"));
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().lines().count() == 9);
    }

    #[test]
    fn mismatch_yields_error_row() {
        let config = BenchConfig {
            specs: vec![GeneratorSpec {
                class: GeometryClass::Convex,
                property: Property::Tour,
                n: 8,
                t: 0,
                seed: 3,
                radius: super::super::gen::DEFAULT_RADIUS,
            }],
            strategies: vec![StrategyId::ConvexInsertion],
        };
        let (rows, _) = bench(&config).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(!rows[0].error.is_empty());
    }

    #[test]
    fn exponent_fit() {
        let quad: Vec<(usize, usize)> = (1..=6).map(|i| (i * 32, i * i * 1024)).collect();
        let e = fit_exponent(&quad);
        assert!((e - 2.0).abs() < 0.05, "{e}");
    }
}
