//! Per-design acceptance checks, stored next to a fixture as `checks.txt`:
//!
//! ```text
//! constraint S_L = M_L + DP_R + 0.2
//! symmetry patch x SL / 2
//! ascending x1..x20 in 0 .. SL / 2
//! patch_design 2.45e9 4.3 1.6 PatchW PatchL 0.1
//! ```

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::design::{design_patch, DesignError, PatchDesignInput};
use crate::expr::{is_identifier, parse_expr, EvalError, Expr, ParamEnv};
use crate::geom::{build_csg_with, check_mirror_symmetry, CsgModel, GeomError, MirrorPlane};
use crate::ir::{Axis, SolidList};
use crate::text::strip_comment;

/// Absolute residual allowed for `constraint` lines.
pub const CONSTRAINT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Check {
    /// `name = expr` must hold within [`CONSTRAINT_TOLERANCE`].
    Constraint { name: String, expr: Expr },
    /// No sampled point may differ in membership from its mirror image.
    Symmetry {
        solid: String,
        axis: Axis,
        offset: Expr,
    },
    /// Strictly increasing values inside the open interval `(lo, hi)`.
    Ascending { names: Vec<String>, lo: Expr, hi: Expr },
    /// Parameters within relative `tolerance` of the closed-form patch size.
    PatchDesign {
        input: PatchDesignInput,
        width: String,
        length: String,
        tolerance: f64,
    },
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Check::Constraint { name, expr } => write!(f, "constraint {name} = {expr}"),
            Check::Symmetry {
                solid,
                axis,
                offset,
            } => write!(f, "symmetry {solid} {} {offset}", axis.as_str()),
            Check::Ascending { names, lo, hi } => {
                write!(f, "ascending {} in {lo} .. {hi}", names.join(" "))
            }
            Check::PatchDesign {
                input,
                width,
                length,
                tolerance,
            } => write!(
                f,
                "patch_design {} {} {} {width} {length} {tolerance}",
                input.f0, input.epsilon_r, input.h
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("check `{check}`: {source}")]
    Eval { check: String, source: EvalError },
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("check `{0}`: no such solid after booleans")]
    UnknownSolid(String),
    #[error(transparent)]
    Design(#[from] DesignError),
}

/// Expands `x1..x20` to `x1 x2 … x20`; other tokens pass through.
fn expand_names(token: &str) -> Option<Vec<String>> {
    let Some((a, b)) = token.split_once("..") else {
        return is_identifier(token).then(|| alloc::vec![token.to_string()]);
    };
    let split = |s: &str| {
        let i = s.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        let (p, n) = s.split_at(i);
        Some((p.to_string(), n.parse::<u32>().ok()?))
    };
    let (pa, na) = split(a)?;
    let (pb, nb) = split(b)?;
    if pa != pb || na > nb || !is_identifier(a) {
        return None;
    }
    Some((na..=nb).map(|i| format!("{pa}{i}")).collect())
}

pub fn parse_checks(text: &str) -> Result<Vec<Check>, CheckError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |message: &str| CheckError::Format {
            line,
            message: message.to_string(),
        };
        let expr = |s: &str| parse_expr(s.trim()).map_err(|e| err(&e.to_string()));
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        let (kind, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        let rest = rest.trim();
        let check = match kind {
            "constraint" => {
                let (name, rhs) = rest.split_once('=').ok_or_else(|| err("expected `name = expr`"))?;
                let name = name.trim();
                if !is_identifier(name) {
                    return Err(err("constraint needs a parameter name on the left"));
                }
                Check::Constraint {
                    name: name.to_string(),
                    expr: expr(rhs)?,
                }
            }
            "symmetry" => {
                let mut parts = rest.splitn(3, char::is_whitespace);
                let solid = parts.next().unwrap_or_default();
                let axis = parts
                    .next()
                    .and_then(|a| a.parse().ok())
                    .ok_or_else(|| err("expected `symmetry <solid> <axis> <offset>`"))?;
                Check::Symmetry {
                    solid: solid.to_string(),
                    axis,
                    offset: expr(parts.next().unwrap_or_default())?,
                }
            }
            "ascending" => {
                let (names, bounds) = rest
                    .split_once(" in ")
                    .ok_or_else(|| err("expected `ascending <names> in <lo> .. <hi>`"))?;
                let mut all = Vec::new();
                for tok in names.split_whitespace() {
                    all.extend(expand_names(tok).ok_or_else(|| err("bad parameter name"))?);
                }
                if all.len() < 2 {
                    return Err(err("ascending needs at least two names"));
                }
                let (lo, hi) = bounds.split_once("..").ok_or_else(|| err("expected `lo .. hi`"))?;
                Check::Ascending {
                    names: all,
                    lo: expr(lo)?,
                    hi: expr(hi)?,
                }
            }
            "patch_design" => {
                let f: Vec<&str> = rest.split_whitespace().collect();
                let [f0, er, h, width, length, tol] = f[..] else {
                    return Err(err("expected `patch_design f0 eps_r h width length tolerance`"));
                };
                let num = |s: &str| s.parse::<f64>().map_err(|_| err("bad number"));
                Check::PatchDesign {
                    input: PatchDesignInput {
                        f0: num(f0)?,
                        epsilon_r: num(er)?,
                        h: num(h)?,
                    },
                    width: width.to_string(),
                    length: length.to_string(),
                    tolerance: num(tol)?,
                }
            }
            _ => return Err(err("unknown check kind")),
        };
        out.push(check);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub check: String,
    pub pass: bool,
    /// Residual, mismatch fraction, smallest gap or worst relative error.
    pub measured: f64,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {}", self.check, self.detail)
    }
}

/// Runs every check under `env`. `samples` and `seed` drive symmetry sampling.
pub fn evaluate_checks(
    checks: &[Check],
    sl: &SolidList,
    env: &ParamEnv,
    samples: u64,
    seed: u64,
) -> Result<Vec<CheckOutcome>, CheckError> {
    let mut csg: Option<CsgModel> = None;
    let mut out = Vec::with_capacity(checks.len());
    for c in checks {
        let label = c.to_string();
        let eval = |e: &Expr| {
            e.eval(env).map_err(|source| CheckError::Eval {
                check: label.clone(),
                source,
            })
        };
        let param = |n: &str| eval(&Expr::param(n));
        let outcome = match c {
            Check::Constraint { name, expr } => {
                let lhs = param(name)?;
                let rhs = eval(expr)?;
                let residual = (lhs - rhs).abs();
                CheckOutcome {
                    pass: residual < CONSTRAINT_TOLERANCE,
                    measured: residual,
                    detail: format!("lhs {lhs}, rhs {rhs}, residual {residual:e}"),
                    check: label,
                }
            }
            Check::Symmetry {
                solid,
                axis,
                offset,
            } => {
                let offset = eval(offset)?;
                if csg.is_none() {
                    csg = Some(build_csg_with(sl, env)?);
                }
                let node = csg
                    .as_ref()
                    .and_then(|m| m.get(solid))
                    .ok_or_else(|| CheckError::UnknownSolid(label.clone()))?;
                let plane = MirrorPlane {
                    axis: *axis,
                    offset,
                };
                let frac = check_mirror_symmetry(node, plane, samples, seed);
                CheckOutcome {
                    pass: frac == 0.0,
                    measured: frac,
                    detail: format!("asymmetric fraction {frac} over {samples} samples"),
                    check: label,
                }
            }
            Check::Ascending { names, lo, hi } => {
                let (lo, hi) = (eval(lo)?, eval(hi)?);
                let values = names.iter().map(|n| param(n)).collect::<Result<Vec<_>, _>>()?;
                let min_gap = values
                    .windows(2)
                    .map(|w| w[1] - w[0])
                    .fold(f64::INFINITY, f64::min);
                let inside = values.iter().all(|&v| lo < v && v < hi);
                CheckOutcome {
                    pass: inside && min_gap > 0.0,
                    measured: min_gap,
                    detail: format!(
                        "{} values, smallest step {min_gap}, all inside ({lo}, {hi}): {inside}",
                        values.len()
                    ),
                    check: label,
                }
            }
            Check::PatchDesign {
                input,
                width,
                length,
                tolerance,
            } => {
                let d = design_patch(*input)?;
                let (w, l) = (param(width)?, param(length)?);
                let ew = (w - d.width).abs() / w.abs();
                let el = (l - d.length).abs() / l.abs();
                let worst = ew.max(el);
                CheckOutcome {
                    pass: worst <= *tolerance,
                    measured: worst,
                    detail: format!(
                        "designed W {:.4} vs {w} ({:.2}%), L {:.4} vs {l} ({:.2}%)",
                        d.width,
                        ew * 100.0,
                        d.length,
                        el * 100.0
                    ),
                    check: label,
                }
            }
        };
        out.push(outcome);
    }
    Ok(out)
}
