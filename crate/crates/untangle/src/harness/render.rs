//! SVG rendering of a trace: one frame per state (flips + 1 total). In each
//! non-final frame the pair about to be removed is dashed; in each non-first
//! frame the pair just inserted is bold. Output bytes are deterministic.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use rayon::prelude::*;

use crate::geometry::Color;
use crate::model::{Instance, ModelError, SegKey, UntangleTrace};

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("trace replay failed: {0}")]
    Replay(#[from] ModelError),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

/// Renders every state of the trace into `dir` as frame_XXXX.svg files.
/// Returns the number of frames written (always flips + 1).
pub fn render(trace: &UntangleTrace, dir: &Path) -> Result<usize, RenderError> {
    std::fs::create_dir_all(dir)?;
    let mut states = vec![trace.instance.clone()];
    for ev in &trace.events {
        let next = states.last().unwrap().apply_flip(ev)?;
        states.push(next);
    }
    let frames: Vec<(usize, String)> = states
        .par_iter()
        .enumerate()
        .map(|(i, state)| {
            let removed = trace.events.get(i).map(|e| e.removed);
            let inserted = i.checked_sub(1).map(|j| trace.events[j].inserted);
            (i, frame_svg(state, removed, inserted))
        })
        .collect();
    for (i, svg) in &frames {
        std::fs::write(dir.join(format!("frame_{i:04}.svg")), svg)?;
    }
    Ok(states.len())
}

fn frame_svg(
    inst: &Instance,
    removed: Option<(SegKey, SegKey)>,
    inserted: Option<(SegKey, SegKey)>,
) -> String {
    let xs: Vec<i64> = inst.points.iter().map(|p| p.x).collect();
    let ys: Vec<i64> = inst.points.iter().map(|p| p.y).collect();
    let (x0, x1) = (xs.iter().min().unwrap(), xs.iter().max().unwrap());
    let (y0, y1) = (ys.iter().min().unwrap(), ys.iter().max().unwrap());
    let margin = ((x1 - x0).max(y1 - y0).max(1) / 20).max(1);
    let mut s = String::new();
    let _ = write!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n",
        x0 - margin,
        y0 - margin,
        (x1 - x0) + 2 * margin,
        (y1 - y0) + 2 * margin
    );
    // Flip y for screen coordinates via a group transform.
    let _ = write!(s, "<g transform=\"translate(0,{}) scale(1,-1)\">\n", y0 + y1);
    let stroke_w = margin / 2 + 1;
    let in_pair = |k: SegKey, pair: Option<(SegKey, SegKey)>| {
        pair.is_some_and(|(a, b)| k == a || k == b)
    };
    for (&k, &mult) in &inst.segments {
        let (a, b) = inst.seg_points(k);
        let dashed = in_pair(k, removed);
        let bold = in_pair(k, inserted);
        let style = match (dashed, bold) {
            (true, _) => format!(
                "stroke=\"#c62828\" stroke-width=\"{stroke_w}\" stroke-dasharray=\"{d},{d}\"",
                d = stroke_w * 3
            ),
            (_, true) => format!("stroke=\"#1565c0\" stroke-width=\"{}\"", stroke_w * 2),
            _ => format!("stroke=\"#555555\" stroke-width=\"{stroke_w}\""),
        };
        let _ = write!(
            s,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" {} />",
            a.x, a.y, b.x, b.y, style
        );
        if mult > 1 {
            // Indicate multiplicity with a parallel ghost stroke.
            let _ = write!(
                s,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#aaaaaa\" \
                 stroke-width=\"{}\" opacity=\"0.5\" />",
                a.x,
                a.y + 2 * stroke_w,
                b.x,
                b.y + 2 * stroke_w,
                stroke_w
            );
        }
        s.push('\n');
    }
    for p in &inst.points {
        let fill = match p.color {
            Some(Color::Red) => "#d32f2f",
            Some(Color::Blue) => "#1976d2",
            None if inst.is_t_point(p.id) => "#f9a825",
            None => "#222222",
        };
        let _ = write!(
            s,
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{fill}\" />\n",
            p.x,
            p.y,
            stroke_w * 2
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::gen::{generate, GeneratorSpec, DEFAULT_RADIUS};
    use crate::model::{GeometryClass, Property};
    use crate::strategies::{run_strategy, StrategyId};

    #[test]
    fn frame_count_and_determinism() {
        let spec = GeneratorSpec {
            class: GeometryClass::Convex,
            property: Property::Matching,
            n: 6,
            t: 0,
            seed: 11,
            radius: DEFAULT_RADIUS,
        };
        let inst = generate(&spec).unwrap();
        let trace = run_strategy(StrategyId::ConvexInsertion, &inst, false).unwrap();
        let dir = std::env::temp_dir().join("untangle_render_test");
        let frames = render(&trace, &dir).unwrap();
        assert_eq!(frames, trace.events.len() + 1);
        let first = std::fs::read(dir.join("frame_0000.svg")).unwrap();
        render(&trace, &dir).unwrap();
        let again = std::fs::read(dir.join("frame_0000.svg")).unwrap();
        assert_eq!(first, again);
        std::fs::remove_dir_all(&dir).ok();
    }
}
