//! Command-line interface: generate instances, run strategies, sweep
//! benchmarks, query the exhaustive oracle, and render traces as SVG.
//!
//! Exit codes: 0 success, 2 validation failure, 3 strategy precondition
//! mismatch, 1 any other error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};

use untangle::harness::{bench, gen, render};
use untangle::model::{GeometryClass, Instance, Property, UntangleTrace, Verdict};
use untangle::oracle;
use untangle::strategies::{StrategyError, StrategyId};

#[derive(Parser)]
#[command(name = "untangle", about = "Flip-based untangling of crossing segment multisets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SnapshotMode {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded instance of a geometry class and write it as JSON.
    Gen {
        /// Geometry class (convex, one_T_point, two_T_outside, two_T_inside,
        /// one_in_one_out, parallel_separated, T_outside_hull, general).
        #[arg(long)]
        class: String,
        /// Property (multigraph, matching, redblue_matching, tour, tree).
        #[arg(long)]
        property: String,
        /// Number of segments.
        #[arg(long)]
        n: usize,
        /// Number of non-convex points.
        #[arg(long, default_value_t = 0)]
        t: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = gen::DEFAULT_RADIUS)]
        radius: i64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run one strategy on an instance file and write the trace as JSON.
    Run {
        #[arg(long, value_parser = StrategyId::from_str)]
        strategy: StrategyId,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_enum, default_value_t = SnapshotMode::Off)]
        snapshots: SnapshotMode,
    },
    /// Sweep generator specs x strategies from a JSON config into a CSV.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Exhaustive minimum-flip search on a tiny instance (n <= 6).
    Oracle {
        #[arg(long)]
        input: PathBuf,
        /// Maximum number of states to explore.
        #[arg(long, default_value_t = 1_000_000)]
        cap: usize,
    },
    /// Render a trace file into per-state SVG frames.
    Render {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_enum<T: serde::de::DeserializeOwned>(kind: &str, s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown {kind}: {s}"))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, String> {
    let data = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&data).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &PathBuf, value: &T) -> Result<(), String> {
    let data = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    std::fs::write(path, data).map_err(|e| format!("{}: {e}", path.display()))
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_PRECONDITION: u8 = 3;

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), (u8, String)> {
    let fail = |msg: String| (1u8, msg);
    match cmd {
        Command::Gen {
            class,
            property,
            n,
            t,
            seed,
            radius,
            output,
        } => {
            let spec = gen::GeneratorSpec {
                class: parse_enum::<GeometryClass>("geometry class", &class).map_err(fail)?,
                property: parse_enum::<Property>("property", &property).map_err(fail)?,
                n,
                t,
                seed,
                radius,
            };
            let inst = gen::generate(&spec).map_err(|e| fail(e.to_string()))?;
            write_json(&output, &inst).map_err(fail)?;
            println!(
                "wrote {} ({} segments, {} points, {} initial crossings)",
                output.display(),
                inst.n(),
                inst.points.len(),
                inst.crossing_pairs().len()
            );
            Ok(())
        }
        Command::Run {
            strategy,
            input,
            trace,
            snapshots,
        } => {
            let inst: Instance = read_json(&input).map_err(|m| (EXIT_VALIDATION, m))?;
            let snaps = matches!(snapshots, SnapshotMode::On);
            match bench::run_one(strategy, &inst, snaps) {
                Ok((t, row)) => {
                    write_json(&trace, &t).map_err(fail)?;
                    println!(
                        "{strategy}: {} flips in {:.2} ms (bound {:.1}, ratio {:.4})",
                        row.flips, row.wall_ms, row.bound, row.ratio
                    );
                    Ok(())
                }
                Err(StrategyError::Precondition(msg)) => Err((EXIT_PRECONDITION, msg)),
                Err(e) => Err((EXIT_VALIDATION, e.to_string())),
            }
        }
        Command::Bench { config, csv } => {
            let cfg: bench::BenchConfig = read_json(&config).map_err(fail)?;
            let (rows, summary) = bench::bench(&cfg).map_err(|e| (EXIT_VALIDATION, e.to_string()))?;
            let file = std::fs::File::create(&csv)
                .map_err(|e| fail(format!("{}: {e}", csv.display())))?;
            bench::write_csv(&rows, file).map_err(|e| fail(e.to_string()))?;
            println!("{summary}");
            println!("wrote {} rows to {}", rows.len(), csv.display());
            Ok(())
        }
        Command::Oracle { input, cap } => {
            let inst: Instance = read_json(&input).map_err(|m| (EXIT_VALIDATION, m))?;
            match oracle::min_flips_bfs(&inst, cap).map_err(|e| fail(e.to_string()))? {
                oracle::MinFlips::Exact(k) => println!("minimum flips: {k}"),
                oracle::MinFlips::ExceedsCap => println!("exceeds cap ({cap} states explored)"),
            }
            Ok(())
        }
        Command::Render { trace, out } => {
            let t: UntangleTrace = read_json(&trace).map_err(|m| (EXIT_VALIDATION, m))?;
            if let Verdict::Invalid { reason, index } = t.validate() {
                return Err((EXIT_VALIDATION, format!("trace invalid at flip {index}: {reason}")));
            }
            let frames =
                render::render(&t, &out).map_err(|e| fail(e.to_string()))?;
            println!("wrote {frames} frames to {}", out.display());
            Ok(())
        }
    }
}
