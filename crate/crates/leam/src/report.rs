//! Geometry report of a workspace: per-solid volumes, bounding boxes,
//! centroids and the results of its model checks.

use std::fmt::Write as _;
use std::thread;

use leam_core::checks::{evaluate_checks, Check, CheckOutcome};
use leam_core::geom::{
    build_csg_with, exact_volume, mc_chunk, mc_volume_from_tallies, Aabb, CsgNode, GeomError, McEstimate,
    MC_CHUNK,
};
use leam_core::ir::SolidList;
use leam_core::{trimmed, ParamEnv};

use crate::workspace::{write_atomic, LoadedWorkspace};
use crate::PipelineError;

pub const DEFAULT_SAMPLES: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 42;
pub const REPORT_TEXT: &str = "geom_report.txt";
pub const REPORT_RECORD: &str = "geom_report.rec";

/// Monte-Carlo volume with chunks spread over threads.
///
/// Chunks are independent seeded streams and tallies are combined in chunk
/// order, so the result equals the sequential estimate bit for bit.
pub fn mc_volume_parallel(node: &CsgNode, samples: u64, seed: u64) -> Result<McEstimate, GeomError> {
    let bb = node.bbox();
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
    if samples == 0 || !(bb.volume() > 0.0) {
        return Err(GeomError::EmptyBoundingBox);
    }
    let chunks = samples.div_ceil(MC_CHUNK);
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(chunks as usize);
    let size = |k: u64| (samples - k * MC_CHUNK).min(MC_CHUNK);
    let mut tallies = vec![Default::default(); chunks as usize];
    thread::scope(|s| {
        for (w, part) in tallies.chunks_mut(chunks.div_ceil(workers as u64) as usize).enumerate() {
            let bb = &bb;
            s.spawn(move || {
                let first = (w * part.len()) as u64;
                for (i, slot) in part.iter_mut().enumerate() {
                    let k = first + i as u64;
                    *slot = mc_chunk(node, bb, seed, k, size(k));
                }
            });
        }
    });
    Ok(mc_volume_from_tallies(&bb, &tallies))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolidReport {
    pub name: String,
    /// Present when the solid decomposes into disjoint or nested primitives.
    pub exact_volume: Option<f64>,
    pub mc: McEstimate,
    pub bbox: Aabb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: Check,
    /// Human label, with parameter expressions evaluated where useful.
    pub label: String,
    pub outcome: CheckOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeomReport {
    pub samples: u64,
    pub seed: u64,
    pub solids: Vec<SolidReport>,
    pub checks: Vec<CheckRow>,
}

fn label(check: &Check, env: &ParamEnv) -> String {
    match check {
        Check::Constraint { name, expr } => format!("{name} = {expr}"),
        Check::Symmetry { solid, axis, offset } => {
            let at = offset.eval(env).map_or_else(|_| offset.to_string(), |v| trimmed(v, 9));
            format!("symmetry of {solid}, plane {}={at}", axis.as_str())
        }
        Check::Ascending { names, lo, hi } => {
            let first = names.first().map_or("", String::as_str);
            let last = names.last().map_or("", String::as_str);
            let ev = |e: &leam_core::Expr| e.eval(env).map_or_else(|_| e.to_string(), |v| trimmed(v, 9));
            format!("{first} .. {last} ascending in ({}, {})", ev(lo), ev(hi))
        }
        Check::PatchDesign { width, length, .. } => format!("{width} and {length} against the patch formulas"),
    }
}

/// Builds the report under `env`. Every surviving solid gets a Monte-Carlo
/// estimate; exact volumes are added where available.
pub fn geom_report(
    sl: &SolidList,
    env: &ParamEnv,
    checks: &[Check],
    samples: u64,
    seed: u64,
) -> Result<GeomReport, PipelineError> {
    let csg = build_csg_with(sl, env)?;
    let mut solids = Vec::with_capacity(csg.len());
    for (name, node) in &csg.nodes {
        solids.push(SolidReport {
            name: name.clone(),
            exact_volume: exact_volume(node),
            mc: mc_volume_parallel(node, samples, seed)?,
            bbox: node.bbox(),
        });
    }
    let outcomes = evaluate_checks(checks, sl, env, samples, seed)?;
    let checks = checks
        .iter()
        .zip(outcomes)
        .map(|(c, outcome)| CheckRow {
            check: c.clone(),
            label: label(c, env),
            outcome,
        })
        .collect();
    Ok(GeomReport {
        samples,
        seed,
        solids,
        checks,
    })
}

fn triple(p: [f64; 3]) -> String {
    format!("{}, {}, {}", trimmed(p[0], 9), trimmed(p[1], 9), trimmed(p[2], 9))
}

impl GeomReport {
    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.outcome.pass)
    }

    /// One check's row, e.g. `S_L = M_L + DP_R + 0.2: pass (residual 0)`.
    pub fn check_line(row: &CheckRow) -> String {
        let status = if row.outcome.pass { "pass" } else { "FAIL" };
        let m = row.outcome.measured;
        match row.check {
            Check::Symmetry { .. } => format!("{}: asymmetry {} ({status})", row.label, m),
            Check::Constraint { .. } => format!("{}: {status} (residual {m:e})", row.label),
            _ => format!("{}: {status} ({})", row.label, row.outcome.detail),
        }
    }

    /// Human-readable report.
    pub fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Geometry report ({} samples per solid, seed {})", self.samples, self.seed);
        for s in &self.solids {
            let _ = writeln!(out, "\nsolid {}", s.name);
            match s.exact_volume {
                Some(v) => {
                    let _ = writeln!(out, "  exact volume: {} mm^3", trimmed(v, 9));
                }
                None => {
                    let _ = writeln!(out, "  exact volume: not decomposable");
                }
            }
            let _ = writeln!(
                out,
                "  estimated volume: {} ± {} mm^3",
                trimmed(s.mc.estimate, 6),
                trimmed(s.mc.stderr, 6)
            );
            let _ = writeln!(out, "  bounding box: ({}) .. ({})", triple(s.bbox.min), triple(s.bbox.max));
            if let Some(c) = s.mc.centroid {
                let _ = writeln!(out, "  centroid: ({})", triple(c.map(|x| (x * 1e4).round() / 1e4)));
            }
        }
        if !self.checks.is_empty() {
            let _ = writeln!(out, "\nchecks");
            for row in &self.checks {
                let _ = writeln!(out, "  {}", Self::check_line(row));
            }
        }
        out
    }

    /// Machine-readable record, one block per solid and per check.
    pub fn record(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "report\n  samples: {}\n  seed: {}", self.samples, self.seed);
        for s in &self.solids {
            let _ = writeln!(out, "\nsolid {}", s.name);
            if let Some(v) = s.exact_volume {
                let _ = writeln!(out, "  exact_volume: {v}\n  exact_stderr: 0");
            }
            let _ = writeln!(out, "  mc_volume: {}\n  mc_stderr: {}", s.mc.estimate, s.mc.stderr);
            let _ = writeln!(out, "  mc_hits: {}", s.mc.hits);
            let _ = writeln!(out, "  bbox_min: {}, {}, {}", s.bbox.min[0], s.bbox.min[1], s.bbox.min[2]);
            let _ = writeln!(out, "  bbox_max: {}, {}, {}", s.bbox.max[0], s.bbox.max[1], s.bbox.max[2]);
            if let Some(c) = s.mc.centroid {
                let _ = writeln!(out, "  centroid: {}, {}, {}", c[0], c[1], c[2]);
            }
        }
        for row in &self.checks {
            let _ = writeln!(out, "\ncheck {}", row.check);
            let _ = writeln!(out, "  status: {}", if row.outcome.pass { "pass" } else { "fail" });
            let _ = writeln!(out, "  measured: {}", row.outcome.measured);
        }
        out
    }
}

/// Reports on the workspace's current parameters and writes both files.
pub fn write_report(ws: &LoadedWorkspace, samples: u64, seed: u64) -> Result<GeomReport, PipelineError> {
    let env = ws.parameters()?;
    let report = geom_report(&ws.dims, &env, &ws.checks, samples, seed)?;
    write_atomic(&ws.root.join(REPORT_TEXT), report.text().as_bytes())?;
    write_atomic(&ws.root.join(REPORT_RECORD), report.record().as_bytes())?;
    Ok(report)
}
