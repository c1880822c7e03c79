use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{MobilityTrace, Pos, TraceError, Waypoint};
use crate::kernel::{NodeId, SimTime};

/// Shortest decimal form of `x` rounded to 9 significant digits.
pub fn format_number(x: f64) -> String {
    let rounded: f64 = format!("{x:.8e}").parse().expect("float round trip");
    if rounded == 0.0 {
        return "0.0".to_string();
    }
    format!("{rounded:?}")
}

/// Writes one line per trace, `t x y` triples separated by spaces.
pub fn write_traces<W: Write>(mut w: W, traces: &[MobilityTrace]) -> std::io::Result<()> {
    for tr in traces {
        let mut first = true;
        for wp in &tr.waypoints {
            if !first {
                w.write_all(b" ")?;
            }
            first = false;
            write!(
                w,
                "{} {} {}",
                format_number(wp.t.as_secs_f64()),
                format_number(wp.pos.x),
                format_number(wp.pos.y)
            )?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_traces_to(path: &Path, traces: &[MobilityTrace]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_traces(&mut w, traces)?;
    w.flush()
}

/// Parses a `.movements` stream. Node ids are assigned in line order from 0;
/// blank and `#` lines are skipped.
pub fn parse_traces<R: BufRead>(r: R) -> Result<Vec<MobilityTrace>, TraceError> {
    let mut out = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let nums = body
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| TraceError::Parse {
                        line: lineno,
                        message: format!("invalid number {tok:?}"),
                    })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if nums.len() % 3 != 0 {
            return Err(TraceError::Parse {
                line: lineno,
                message: format!("expected t x y triples, found {} numbers", nums.len()),
            });
        }
        let mut waypoints: Vec<Waypoint> = Vec::with_capacity(nums.len() / 3);
        for (i, c) in nums.chunks_exact(3).enumerate() {
            if c[0] < 0.0 {
                return Err(TraceError::Parse {
                    line: lineno,
                    message: format!("negative time {}", c[0]),
                });
            }
            let t = SimTime::from_secs(c[0]);
            if let Some(prev) = waypoints.last() {
                if t <= prev.t {
                    return Err(TraceError::NonMonotone { line: lineno, index: i });
                }
            } else if t != SimTime::ZERO {
                return Err(TraceError::BadStart { line: lineno });
            }
            waypoints.push(Waypoint {
                t,
                pos: Pos::new(c[1], c[2]),
            });
        }
        out.push(MobilityTrace {
            node_id: out.len() as NodeId,
            waypoints,
            wrap_segments: Default::default(),
            torus: None,
        });
    }
    Ok(out)
}

pub fn read_traces(path: &Path) -> Result<Vec<MobilityTrace>, TraceError> {
    parse_traces(BufReader::new(File::open(path)?))
}
