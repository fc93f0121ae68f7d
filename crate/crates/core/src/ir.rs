//! Solid lists: the intermediate representation passed between pipeline stages.
//!
//! Stage 1 produces a plain list (names, roles, materials, shape kinds).
//! Stage 2 adds parameters, evaluated-able geometry and the boolean plan.
//! Both share one line-oriented text format:
//!
//! ```text
//! param PatchW = 10
//!
//! solid patch
//!   role: patch
//!   material: Copper (pure)
//!   shape: brick
//!   xrange: 0 .. PatchW
//!   yrange: 0 .. PatchL
//!   zrange: 0 .. 0.035
//!
//! boolean: subtract patch slot
//! ```

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::{self, Write};
use core::str::FromStr;

use thiserror::Error;

use crate::expr::{is_identifier, parse_expr, EvalError, Expr, ParamEnv};
use crate::geom::polygon::{self, Point2};
use crate::text::{key_value, strip_comment};

pub const DEFAULT_COMPONENT: &str = "component1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Substrate,
    Patch,
    Slot,
    Feedline,
    Ground,
    Stub,
    Other,
}

impl Role {
    pub const ALL: [Role; 7] = [
        Role::Substrate,
        Role::Patch,
        Role::Slot,
        Role::Feedline,
        Role::Ground,
        Role::Stub,
        Role::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Substrate => "substrate",
            Role::Patch => "patch",
            Role::Slot => "slot",
            Role::Feedline => "feedline",
            Role::Ground => "ground",
            Role::Stub => "stub",
            Role::Other => "other",
        }
    }
}

impl FromStr for Role {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Role::ALL.into_iter().find(|r| r.as_str() == s).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeKind {
    Brick,
    Cylinder,
    Extrude2d,
}

impl ShapeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ShapeKind::Brick => "brick",
            ShapeKind::Cylinder => "cylinder",
            ShapeKind::Extrude2d => "extrude2d",
        }
    }

    pub fn is_3d(self) -> bool {
        !matches!(self, ShapeKind::Extrude2d)
    }
}

impl FromStr for ShapeKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "brick" => Ok(ShapeKind::Brick),
            "cylinder" => Ok(ShapeKind::Cylinder),
            "extrude2d" => Ok(ShapeKind::Extrude2d),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    /// The two in-plane axes, in cyclic order (z -> x, y; x -> y, z; y -> z, x).
    pub fn in_plane(self) -> (Axis, Axis) {
        match self {
            Axis::Z => (Axis::X, Axis::Y),
            Axis::X => (Axis::Y, Axis::Z),
            Axis::Y => (Axis::Z, Axis::X),
        }
    }
}

impl FromStr for Axis {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            _ => Err(()),
        }
    }
}

/// Sketch plane of an extruded profile. Points are given in the plane's
/// cyclic coordinate order and the extrusion runs along the remaining axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Plane {
    Xy,
    Yz,
    Zx,
}

impl Plane {
    pub fn as_str(self) -> &'static str {
        match self {
            Plane::Xy => "xy",
            Plane::Yz => "yz",
            Plane::Zx => "zx",
        }
    }

    pub fn normal(self) -> Axis {
        match self {
            Plane::Xy => Axis::Z,
            Plane::Yz => Axis::X,
            Plane::Zx => Axis::Y,
        }
    }
}

impl FromStr for Plane {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "xy" => Ok(Plane::Xy),
            "yz" => Ok(Plane::Yz),
            "zx" => Ok(Plane::Zx),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Range {
    pub min: Expr,
    pub max: Expr,
}

impl Range {
    pub fn new(min: Expr, max: Expr) -> Self {
        Range { min, max }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShapeSpec {
    Brick {
        x: Range,
        y: Range,
        z: Range,
    },
    Cylinder {
        axis: Axis,
        center: (Expr, Expr),
        outer_radius: Expr,
        inner_radius: Expr,
        range: Range,
    },
    /// `points` is closed: the first point is repeated last.
    Extrude2d {
        plane: Plane,
        points: Vec<(Expr, Expr)>,
        base: Expr,
        height: Expr,
    },
}

impl ShapeSpec {
    pub fn kind(&self) -> ShapeKind {
        match self {
            ShapeSpec::Brick { .. } => ShapeKind::Brick,
            ShapeSpec::Cylinder { .. } => ShapeKind::Cylinder,
            ShapeSpec::Extrude2d { .. } => ShapeKind::Extrude2d,
        }
    }

    /// Every expression in field order.
    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            ShapeSpec::Brick { x, y, z } => {
                alloc::vec![&x.min, &x.max, &y.min, &y.max, &z.min, &z.max]
            }
            ShapeSpec::Cylinder {
                center,
                outer_radius,
                inner_radius,
                range,
                ..
            } => alloc::vec![
                &center.0,
                &center.1,
                outer_radius,
                inner_radius,
                &range.min,
                &range.max
            ],
            ShapeSpec::Extrude2d {
                points,
                base,
                height,
                ..
            } => {
                let mut v: Vec<&Expr> = Vec::with_capacity(points.len() * 2 + 2);
                v.push(base);
                v.push(height);
                for (a, b) in points {
                    v.push(a);
                    v.push(b);
                }
                v
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        match self {
            ShapeSpec::Extrude2d { points, .. } => {
                points.len() >= 2 && points.first() == points.last()
            }
            _ => true,
        }
    }

    /// Evaluates the shape and checks its ordering invariants.
    pub fn evaluate(&self, env: &ParamEnv) -> Result<EvaluatedShape, ShapeError> {
        let ev = |e: &Expr| e.eval(env).map_err(ShapeError::Eval);
        let range = |r: &Range| -> Result<[f64; 2], ShapeError> {
            let lo = ev(&r.min)?;
            let hi = ev(&r.max)?;
            if lo > hi {
                return Err(ShapeError::Invalid(format!(
                    "range {} .. {} evaluates to {lo} > {hi}",
                    r.min, r.max
                )));
            }
            Ok([lo, hi])
        };
        match self {
            ShapeSpec::Brick { x, y, z } => {
                let (x, y, z) = (range(x)?, range(y)?, range(z)?);
                Ok(EvaluatedShape::Brick {
                    min: [x[0], y[0], z[0]],
                    max: [x[1], y[1], z[1]],
                })
            }
            ShapeSpec::Cylinder {
                axis,
                center,
                outer_radius,
                inner_radius,
                range: r,
            } => {
                let ro = ev(outer_radius)?;
                let ri = ev(inner_radius)?;
                if !(ri >= 0.0 && ri < ro) {
                    return Err(ShapeError::Invalid(format!(
                        "cylinder radii need 0 <= inner < outer, got inner {ri}, outer {ro}"
                    )));
                }
                Ok(EvaluatedShape::Cylinder {
                    axis: *axis,
                    center: [ev(&center.0)?, ev(&center.1)?],
                    outer_radius: ro,
                    inner_radius: ri,
                    range: range(r)?,
                })
            }
            ShapeSpec::Extrude2d {
                plane,
                points,
                base,
                height,
            } => {
                if !self.is_closed() {
                    return Err(ShapeError::OpenPolygon);
                }
                let mut pts = Vec::with_capacity(points.len());
                for (a, b) in &points[..points.len() - 1] {
                    pts.push(Point2::new(ev(a)?, ev(b)?));
                }
                polygon::check_simple(&pts).map_err(|e| ShapeError::Invalid(e.to_string()))?;
                let base = ev(base)?;
                let height = ev(height)?;
                if height <= 0.0 {
                    return Err(ShapeError::Invalid(format!(
                        "extrusion height must be positive, got {height}"
                    )));
                }
                Ok(EvaluatedShape::Extrude {
                    plane: *plane,
                    polygon: pts,
                    base,
                    height,
                })
            }
        }
    }
}

/// Numeric geometry of a single solid.
#[derive(Debug, Clone, PartialEq)]
pub enum EvaluatedShape {
    Brick {
        min: [f64; 3],
        max: [f64; 3],
    },
    Cylinder {
        axis: Axis,
        center: [f64; 2],
        outer_radius: f64,
        inner_radius: f64,
        range: [f64; 2],
    },
    /// `polygon` holds distinct vertices, not closed.
    Extrude {
        plane: Plane,
        polygon: Vec<Point2>,
        base: f64,
        height: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShapeError {
    #[error(transparent)]
    Eval(EvalError),
    #[error("polygon is not closed")]
    OpenPolygon,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solid {
    pub name: String,
    pub component: String,
    pub role: Role,
    pub material: String,
    pub shape: ShapeKind,
    /// Present in dimensioned lists only.
    pub geometry: Option<ShapeSpec>,
    /// Free-text position hint from stage 1.
    pub position: Option<String>,
}

impl Solid {
    pub fn new(name: &str, role: Role, material: &str, geometry: ShapeSpec) -> Self {
        Solid {
            name: name.to_string(),
            component: DEFAULT_COMPONENT.to_string(),
            role,
            material: material.to_string(),
            shape: geometry.kind(),
            geometry: Some(geometry),
            position: None,
        }
    }

    /// `component:name`, the path macros use to address the solid.
    pub fn path(&self) -> String {
        format!("{}:{}", self.component, self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoolKind {
    Add,
    Subtract,
    Intersect,
}

impl BoolKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoolKind::Add => "add",
            BoolKind::Subtract => "subtract",
            BoolKind::Intersect => "intersect",
        }
    }
}

impl FromStr for BoolKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "add" => Ok(BoolKind::Add),
            "subtract" => Ok(BoolKind::Subtract),
            "intersect" => Ok(BoolKind::Intersect),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BooleanStep {
    pub kind: BoolKind,
    pub target: String,
    pub tool: String,
}

impl BooleanStep {
    pub fn new(kind: BoolKind, target: &str, tool: &str) -> Self {
        BooleanStep {
            kind,
            target: target.to_string(),
            tool: tool.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolidList {
    pub solids: Vec<Solid>,
    pub parameters: ParamEnv,
    pub materials_used: BTreeSet<String>,
    pub boolean_plan: Vec<BooleanStep>,
    pub dimensioned: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IrError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("duplicate solid `{0}`")]
    DuplicateSolid(String),
    #[error("line {line}: unknown role `{role}`")]
    UnknownRole { line: usize, role: String },
    #[error("line {line}: unknown shape `{shape}`")]
    UnknownShape { line: usize, shape: String },
    #[error("solid `{solid}` references unbound parameter `{name}`")]
    UnboundParameter { solid: String, name: String },
    #[error("solid `{0}`: polygon is not closed (first point must be repeated last)")]
    OpenPolygon(String),
    #[error("solid `{solid}`: {message}")]
    InvalidShape { solid: String, message: String },
    #[error("boolean step references unknown solid `{0}`")]
    UnknownSolid(String),
    #[error("invalid boolean step: {0}")]
    BadBoolean(String),
    #[error("slot solid `{0}` is never subtracted")]
    SlotNotSubtracted(String),
    #[error("materials_used does not match the materials of the solids")]
    MaterialsMismatch,
}

impl SolidList {
    /// Builds a list and derives `materials_used` from the solids.
    pub fn new(
        solids: Vec<Solid>,
        parameters: ParamEnv,
        boolean_plan: Vec<BooleanStep>,
        dimensioned: bool,
    ) -> Self {
        let materials_used = solids.iter().map(|s| s.material.clone()).collect();
        SolidList {
            solids,
            parameters,
            materials_used,
            boolean_plan,
            dimensioned,
        }
    }

    pub fn solid(&self, name: &str) -> Option<&Solid> {
        self.solids.iter().find(|s| s.name == name)
    }

    /// Parameter names in order of first reference by any shape, then any
    /// unreferenced declared parameters by name.
    pub fn params_by_first_use(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for solid in &self.solids {
            if let Some(g) = &solid.geometry {
                for e in g.exprs() {
                    e.visit_params(&mut |n| {
                        if self.parameters.contains(n) && seen.insert(n.to_string()) {
                            out.push(n.to_string());
                        }
                    });
                }
            }
        }
        let mut rest: Vec<String> = self
            .parameters
            .names()
            .filter(|n| !seen.contains(*n))
            .map(ToString::to_string)
            .collect();
        rest.sort();
        out.extend(rest);
        out
    }

    /// Evaluated geometry for every solid, in list order.
    pub fn evaluate(&self) -> Result<Vec<(String, EvaluatedShape)>, IrError> {
        self.evaluate_with(&self.parameters)
    }

    pub fn evaluate_with(&self, env: &ParamEnv) -> Result<Vec<(String, EvaluatedShape)>, IrError> {
        let mut out = Vec::with_capacity(self.solids.len());
        for solid in &self.solids {
            let g = solid.geometry.as_ref().ok_or_else(|| IrError::InvalidShape {
                solid: solid.name.clone(),
                message: "solid has no dimensions".into(),
            })?;
            let shape = g.evaluate(env).map_err(|e| shape_error(&solid.name, e))?;
            out.push((solid.name.clone(), shape));
        }
        Ok(out)
    }

    /// Checks every structural invariant of the list.
    pub fn validate(&self) -> Result<(), IrError> {
        let mut names = BTreeSet::new();
        for s in &self.solids {
            if s.name.is_empty() || !is_identifier(&s.name) {
                return Err(IrError::Format {
                    line: 0,
                    message: format!("invalid solid name `{}`", s.name),
                });
            }
            if !names.insert(s.name.as_str()) {
                return Err(IrError::DuplicateSolid(s.name.clone()));
            }
            if s.geometry.as_ref().is_some_and(|g| g.kind() != s.shape) {
                return Err(IrError::InvalidShape {
                    solid: s.name.clone(),
                    message: "geometry does not match shape kind".into(),
                });
            }
        }
        let mats: BTreeSet<String> = self.solids.iter().map(|s| s.material.clone()).collect();
        if mats != self.materials_used {
            return Err(IrError::MaterialsMismatch);
        }
        if !self.dimensioned {
            if !self.parameters.is_empty() || !self.boolean_plan.is_empty() {
                return Err(IrError::Format {
                    line: 0,
                    message: "parameters and boolean steps belong to dimensioned lists".into(),
                });
            }
            if self.solids.iter().any(|s| s.geometry.is_some()) {
                return Err(IrError::Format {
                    line: 0,
                    message: "geometry belongs to dimensioned lists".into(),
                });
            }
            return Ok(());
        }
        for s in &self.solids {
            let g = s.geometry.as_ref().ok_or_else(|| IrError::InvalidShape {
                solid: s.name.clone(),
                message: "solid has no dimensions".into(),
            })?;
            for e in g.exprs() {
                let mut missing = None;
                e.visit_params(&mut |n| {
                    if missing.is_none() && !self.parameters.contains(n) {
                        missing = Some(n.to_string());
                    }
                });
                if let Some(name) = missing {
                    return Err(IrError::UnboundParameter {
                        solid: s.name.clone(),
                        name,
                    });
                }
            }
            if !g.is_closed() {
                return Err(IrError::OpenPolygon(s.name.clone()));
            }
            g.evaluate(&self.parameters).map_err(|e| shape_error(&s.name, e))?;
        }
        let mut consumed = BTreeSet::new();
        for step in &self.boolean_plan {
            for n in [&step.target, &step.tool] {
                if !names.contains(n.as_str()) {
                    return Err(IrError::UnknownSolid(n.clone()));
                }
                if consumed.contains(n.as_str()) {
                    return Err(IrError::BadBoolean(format!(
                        "`{n}` was already consumed by an earlier step"
                    )));
                }
            }
            if step.target == step.tool {
                return Err(IrError::BadBoolean(format!(
                    "`{}` cannot be combined with itself",
                    step.target
                )));
            }
            consumed.insert(step.tool.as_str());
        }
        for s in self.solids.iter().filter(|s| s.role == Role::Slot) {
            let subtracted = self
                .boolean_plan
                .iter()
                .any(|b| b.kind == BoolKind::Subtract && b.tool == s.name);
            if !subtracted {
                return Err(IrError::SlotNotSubtracted(s.name.clone()));
            }
        }
        Ok(())
    }

    /// Canonical text form. Fails if the list violates its invariants.
    pub fn serialize(&self) -> Result<String, IrError> {
        self.validate()?;
        let mut out = String::new();
        for (name, value) in self.parameters.iter() {
            let _ = writeln!(out, "param {name} = {value}");
        }
        for s in &self.solids {
            if !out.is_empty() {
                out.push('\n');
            }
            write_solid(&mut out, s);
        }
        if !self.boolean_plan.is_empty() {
            out.push('\n');
            for b in &self.boolean_plan {
                let _ = writeln!(out, "boolean: {} {} {}", b.kind.as_str(), b.target, b.tool);
            }
        }
        Ok(out)
    }
}

fn shape_error(solid: &str, e: ShapeError) -> IrError {
    match e {
        ShapeError::Eval(EvalError::UnboundParameter(name)) => IrError::UnboundParameter {
            solid: solid.to_string(),
            name,
        },
        ShapeError::OpenPolygon => IrError::OpenPolygon(solid.to_string()),
        other => IrError::InvalidShape {
            solid: solid.to_string(),
            message: other.to_string(),
        },
    }
}

fn write_solid(out: &mut String, s: &Solid) {
    let _ = writeln!(out, "solid {}", s.name);
    let _ = writeln!(out, "  role: {}", s.role.as_str());
    let _ = writeln!(out, "  material: {}", s.material);
    if s.component != DEFAULT_COMPONENT {
        let _ = writeln!(out, "  component: {}", s.component);
    }
    if let Some(pos) = &s.position {
        let _ = writeln!(out, "  position: {pos}");
    }
    let _ = writeln!(out, "  shape: {}", s.shape.as_str());
    match &s.geometry {
        None => {}
        Some(ShapeSpec::Brick { x, y, z }) => {
            let _ = writeln!(out, "  xrange: {} .. {}", x.min, x.max);
            let _ = writeln!(out, "  yrange: {} .. {}", y.min, y.max);
            let _ = writeln!(out, "  zrange: {} .. {}", z.min, z.max);
        }
        Some(ShapeSpec::Cylinder {
            axis,
            center,
            outer_radius,
            inner_radius,
            range,
        }) => {
            let _ = writeln!(out, "  axis: {}", axis.as_str());
            let _ = writeln!(out, "  center: {}, {}", center.0, center.1);
            let _ = writeln!(out, "  outer_radius: {outer_radius}");
            let _ = writeln!(out, "  inner_radius: {inner_radius}");
            let _ = writeln!(out, "  range: {} .. {}", range.min, range.max);
        }
        Some(ShapeSpec::Extrude2d {
            plane,
            points,
            base,
            height,
        }) => {
            let _ = writeln!(out, "  plane: {}", plane.as_str());
            let _ = writeln!(out, "  base: {base}");
            let _ = writeln!(out, "  height: {height}");
            for (a, b) in points {
                let _ = writeln!(out, "  point: {a}, {b}");
            }
        }
    }
}

impl fmt::Display for SolidList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.serialize() {
            Ok(s) => f.write_str(&s),
            Err(_) => Err(fmt::Error),
        }
    }
}

#[derive(Default)]
struct SolidDraft {
    line: usize,
    name: String,
    role: Option<Role>,
    material: Option<String>,
    component: Option<String>,
    position: Option<String>,
    shape: Option<ShapeKind>,
    fields: Vec<(usize, String, String)>,
    points: Vec<(usize, String)>,
}

fn fmt_err(line: usize, message: impl Into<String>) -> IrError {
    IrError::Format {
        line,
        message: message.into(),
    }
}

fn expr_at(line: usize, text: &str) -> Result<Expr, IrError> {
    parse_expr(text).map_err(|e| fmt_err(line, format!("bad expression `{text}`: {e}")))
}

fn range_at(line: usize, text: &str) -> Result<Range, IrError> {
    let (a, b) = text
        .split_once("..")
        .ok_or_else(|| fmt_err(line, "expected `<expr> .. <expr>`"))?;
    Ok(Range::new(expr_at(line, a)?, expr_at(line, b)?))
}

fn pair_at(line: usize, text: &str) -> Result<(Expr, Expr), IrError> {
    let (a, b) = text
        .split_once(',')
        .ok_or_else(|| fmt_err(line, "expected `<expr> , <expr>`"))?;
    Ok((expr_at(line, a)?, expr_at(line, b)?))
}

impl SolidDraft {
    fn take_field(&mut self, key: &str) -> Option<(usize, String)> {
        let i = self.fields.iter().position(|(_, k, _)| k == key)?;
        let (line, _, v) = self.fields.remove(i);
        Some((line, v))
    }

    fn required(&mut self, key: &str) -> Result<(usize, String), IrError> {
        self.take_field(key).ok_or_else(|| {
            fmt_err(
                self.line,
                format!("solid `{}` is missing `{key}:`", self.name),
            )
        })
    }

    fn finish(mut self, dimensioned: bool) -> Result<Solid, IrError> {
        if self.role.is_none()
            && self.material.is_none()
            && self.shape.is_none()
            && self.fields.is_empty()
            && self.points.is_empty()
        {
            return Err(fmt_err(self.line, format!("solid `{}` has an empty block", self.name)));
        }
        let role = self
            .role
            .ok_or_else(|| fmt_err(self.line, format!("solid `{}` is missing `role:`", self.name)))?;
        let material = self.material.take().ok_or_else(|| {
            fmt_err(self.line, format!("solid `{}` is missing `material:`", self.name))
        })?;
        let shape = self
            .shape
            .ok_or_else(|| fmt_err(self.line, format!("solid `{}` is missing `shape:`", self.name)))?;
        let geometry = if dimensioned {
            Some(self.geometry(shape)?)
        } else {
            None
        };
        if let Some((line, key, _)) = self.fields.first() {
            return Err(fmt_err(*line, format!("field `{key}` does not apply here")));
        }
        if let Some((line, _)) = self.points.first() {
            return Err(fmt_err(*line, "field `point` does not apply here"));
        }
        Ok(Solid {
            name: self.name,
            component: self.component.unwrap_or_else(|| DEFAULT_COMPONENT.to_string()),
            role,
            material,
            shape,
            geometry,
            position: self.position,
        })
    }

    fn geometry(&mut self, shape: ShapeKind) -> Result<ShapeSpec, IrError> {
        Ok(match shape {
            ShapeKind::Brick => {
                let (lx, x) = self.required("xrange")?;
                let (ly, y) = self.required("yrange")?;
                let (lz, z) = self.required("zrange")?;
                ShapeSpec::Brick {
                    x: range_at(lx, &x)?,
                    y: range_at(ly, &y)?,
                    z: range_at(lz, &z)?,
                }
            }
            ShapeKind::Cylinder => {
                let (la, axis) = self.required("axis")?;
                let axis = axis
                    .parse()
                    .map_err(|_| fmt_err(la, format!("unknown axis `{axis}`")))?;
                let (lc, center) = self.required("center")?;
                let (lo, outer) = self.required("outer_radius")?;
                let (li, inner) = self.required("inner_radius")?;
                let (lr, range) = self.required("range")?;
                ShapeSpec::Cylinder {
                    axis,
                    center: pair_at(lc, &center)?,
                    outer_radius: expr_at(lo, &outer)?,
                    inner_radius: expr_at(li, &inner)?,
                    range: range_at(lr, &range)?,
                }
            }
            ShapeKind::Extrude2d => {
                let (lp, plane) = self.required("plane")?;
                let plane = plane
                    .parse()
                    .map_err(|_| fmt_err(lp, format!("unknown plane `{plane}`")))?;
                let (lb, base) = self.required("base")?;
                let (lh, height) = self.required("height")?;
                let points = core::mem::take(&mut self.points)
                    .into_iter()
                    .map(|(l, t)| pair_at(l, &t))
                    .collect::<Result<Vec<_>, _>>()?;
                if points.len() < 4 {
                    return Err(fmt_err(
                        self.line,
                        format!("solid `{}` needs at least 3 distinct points", self.name),
                    ));
                }
                if points.first() != points.last() {
                    return Err(IrError::OpenPolygon(self.name.clone()));
                }
                ShapeSpec::Extrude2d {
                    plane,
                    points,
                    base: expr_at(lb, &base)?,
                    height: expr_at(lh, &height)?,
                }
            }
        })
    }
}

/// Parses a solid list; `dimensioned` selects the stage-2 form.
pub fn parse_solid_list(text: &str, dimensioned: bool) -> Result<SolidList, IrError> {
    let mut solids: Vec<Solid> = Vec::new();
    let mut params = ParamEnv::new();
    let mut plan = Vec::new();
    let mut current: Option<SolidDraft> = None;
    let mut seen = BTreeSet::new();

    let mut flush = |draft: Option<SolidDraft>, solids: &mut Vec<Solid>| -> Result<(), IrError> {
        if let Some(d) = draft {
            let solid = d.finish(dimensioned)?;
            if !seen.insert(solid.name.clone()) {
                return Err(IrError::DuplicateSolid(solid.name));
            }
            solids.push(solid);
        }
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("solid ") {
            flush(current.take(), &mut solids)?;
            let name = rest.trim();
            if !is_identifier(name) {
                return Err(fmt_err(line_no, format!("invalid solid name `{name}`")));
            }
            current = Some(SolidDraft {
                line: line_no,
                name: name.to_string(),
                ..Default::default()
            });
        } else if let Some(rest) = line.strip_prefix("param ") {
            flush(current.take(), &mut solids)?;
            if !dimensioned {
                return Err(fmt_err(line_no, "`param` lines belong to dimensioned lists"));
            }
            let (name, value) = rest
                .split_once('=')
                .ok_or_else(|| fmt_err(line_no, "expected `param <name> = <decimal>`"))?;
            let name = name.trim();
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| fmt_err(line_no, format!("bad value for parameter `{name}`")))?;
            params
                .declare(name, value)
                .map_err(|e| fmt_err(line_no, e.to_string()))?;
        } else if let Some(rest) = line.strip_prefix("boolean:") {
            flush(current.take(), &mut solids)?;
            if !dimensioned {
                return Err(fmt_err(line_no, "boolean steps belong to dimensioned lists"));
            }
            let parts: Vec<&str> = rest.split_whitespace().collect();
            let [kind, target, tool] = parts[..] else {
                return Err(fmt_err(line_no, "expected `boolean: <kind> <target> <tool>`"));
            };
            let kind = kind
                .parse()
                .map_err(|_| fmt_err(line_no, format!("unknown boolean kind `{kind}`")))?;
            plan.push(BooleanStep::new(kind, target, tool));
        } else {
            let draft = current
                .as_mut()
                .ok_or_else(|| fmt_err(line_no, "field outside of a solid block"))?;
            let (key, value) =
                key_value(line).ok_or_else(|| fmt_err(line_no, "expected `key: value`"))?;
            match key {
                "role" => {
                    let role = value.parse().map_err(|_| IrError::UnknownRole {
                        line: line_no,
                        role: value.to_string(),
                    })?;
                    set_once(&mut draft.role, role, line_no, key)?;
                }
                "shape" => {
                    let shape = value.parse().map_err(|_| IrError::UnknownShape {
                        line: line_no,
                        shape: value.to_string(),
                    })?;
                    set_once(&mut draft.shape, shape, line_no, key)?;
                }
                "material" => set_once(&mut draft.material, value.to_string(), line_no, key)?,
                "component" => {
                    if !is_identifier(value) {
                        return Err(fmt_err(line_no, format!("invalid component `{value}`")));
                    }
                    set_once(&mut draft.component, value.to_string(), line_no, key)?
                }
                "position" => set_once(&mut draft.position, value.to_string(), line_no, key)?,
                "point" => {
                    if !dimensioned {
                        return Err(fmt_err(line_no, "geometry belongs to dimensioned lists"));
                    }
                    draft.points.push((line_no, value.to_string()));
                }
                "xrange" | "yrange" | "zrange" | "axis" | "center" | "outer_radius"
                | "inner_radius" | "range" | "plane" | "base" | "height" => {
                    if !dimensioned {
                        return Err(fmt_err(line_no, "geometry belongs to dimensioned lists"));
                    }
                    if draft.fields.iter().any(|(_, k, _)| k == key) {
                        return Err(fmt_err(line_no, format!("duplicate field `{key}`")));
                    }
                    draft
                        .fields
                        .push((line_no, key.to_string(), value.to_string()));
                }
                _ => return Err(fmt_err(line_no, format!("unknown field `{key}`"))),
            }
        }
    }
    flush(current.take(), &mut solids)?;
    if solids.is_empty() {
        return Err(fmt_err(text.lines().count().max(1), "no solids"));
    }
    let list = SolidList::new(solids, params, plan, dimensioned);
    list.validate()?;
    Ok(list)
}

fn set_once<T>(slot: &mut Option<T>, value: T, line: usize, key: &str) -> Result<(), IrError> {
    if slot.is_some() {
        return Err(fmt_err(line, format!("duplicate field `{key}`")));
    }
    *slot = Some(value);
    Ok(())
}

/// Outcome of one equality constraint `name = expr`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintResult {
    pub name: String,
    pub expr: Expr,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub pass: bool,
}

/// Checks `param = expr` constraints against the list's parameters.
pub fn validate_constraints(
    sl: &SolidList,
    constraints: &[(String, Expr)],
    tolerance: f64,
) -> Result<Vec<ConstraintResult>, EvalError> {
    constraints
        .iter()
        .map(|(name, expr)| {
            let lhs = sl
                .parameters
                .get(name)
                .ok_or_else(|| EvalError::UnboundParameter(name.clone()))?;
            let rhs = expr.eval(&sl.parameters)?;
            let residual = (lhs - rhs).abs();
            Ok(ConstraintResult {
                name: name.clone(),
                expr: expr.clone(),
                lhs,
                rhs,
                residual,
                pass: residual <= tolerance,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const LSLOT: &str = include_str!("../tests/data/lslot_dims.txt");

    #[test]
    fn parses_lslot() {
        let sl = parse_solid_list(LSLOT, true).unwrap();
        assert_eq!(sl.solids.len(), 2);
        assert_eq!(sl.parameters.len(), 7);
        assert_eq!(sl.materials_used.len(), 1);
        assert_eq!(sl.boolean_plan, [BooleanStep::new(BoolKind::Subtract, "patch", "slot")]);
        assert_eq!(sl.solids[0].shape, ShapeKind::Brick);
        assert_eq!(sl.solids[1].shape, ShapeKind::Extrude2d);
    }

    #[test]
    fn serialization_is_canonical() {
        let sl = parse_solid_list(LSLOT, true).unwrap();
        let text = sl.serialize().unwrap();
        assert_eq!(text, LSLOT);
        assert_eq!(parse_solid_list(&text, true).unwrap(), sl);
    }

    #[test]
    fn slot_polygon_visits_the_seven_points() {
        let sl = parse_solid_list(LSLOT, true).unwrap();
        let Some(ShapeSpec::Extrude2d { points, .. }) = &sl.solids[1].geometry else {
            panic!("slot is not an extrusion");
        };
        let got: Vec<(f64, f64)> = points
            .iter()
            .map(|(a, b)| (a.eval(&sl.parameters).unwrap(), b.eval(&sl.parameters).unwrap()))
            .collect();
        assert_eq!(
            got,
            [(2.0, 2.0), (8.0, 2.0), (8.0, 3.0), (3.0, 3.0), (3.0, 6.0), (2.0, 6.0), (2.0, 2.0)]
        );
    }

    #[test]
    fn stage_one_list() {
        let text = "solid patch\n  role: patch\n  material: Copper (pure)\n  position: on top\n  shape: brick\n\nsolid slot\n  role: slot\n  material: Copper (pure)\n  shape: extrude2d\n";
        let sl = parse_solid_list(text, false).unwrap();
        assert!(!sl.dimensioned);
        assert_eq!(sl.solids[0].position.as_deref(), Some("on top"));
        assert_eq!(sl.serialize().unwrap(), text);
        // stage-1 lists carry no geometry
        let bad = "solid p\n  role: patch\n  material: m\n  shape: brick\n  xrange: 0 .. 1\n";
        assert!(matches!(parse_solid_list(bad, false), Err(IrError::Format { line: 5, .. })));
    }

    #[test]
    fn error_paths() {
        assert!(matches!(
            parse_solid_list("solid a\n\nsolid b\n  role: patch\n", false),
            Err(IrError::Format { line: 1, .. })
        ));
        let dup = "solid a\n  role: patch\n  material: m\n  shape: brick\nsolid a\n  role: patch\n  material: m\n  shape: brick\n";
        assert_eq!(parse_solid_list(dup, false), Err(IrError::DuplicateSolid("a".into())));
        assert!(matches!(
            parse_solid_list("solid a\n  role: antenna\n", false),
            Err(IrError::UnknownRole { line: 2, .. })
        ));
        assert!(matches!(
            parse_solid_list("solid a\n  role: patch\n  shape: sphere\n", false),
            Err(IrError::UnknownShape { line: 3, .. })
        ));
        let unbound = LSLOT.replace("param PatchL = 8\n", "");
        assert_eq!(
            parse_solid_list(&unbound, true),
            Err(IrError::UnboundParameter {
                solid: "patch".into(),
                name: "PatchL".into()
            })
        );
        let open = LSLOT.replace("  point: Slot_Offset, Slot_Offset\n\nboolean", "\nboolean");
        assert_eq!(parse_solid_list(&open, true), Err(IrError::OpenPolygon("slot".into())));
        let no_sub = LSLOT.replace("boolean: subtract patch slot\n", "");
        assert_eq!(
            parse_solid_list(&no_sub, true),
            Err(IrError::SlotNotSubtracted("slot".into()))
        );
        let reversed = LSLOT.replace("zrange: 0 .. 0.035", "zrange: 0.035 .. 0");
        assert!(matches!(
            parse_solid_list(&reversed, true),
            Err(IrError::InvalidShape { .. })
        ));
        assert!(matches!(parse_solid_list("", false), Err(IrError::Format { .. })));
    }

    #[test]
    fn self_intersecting_polygon_rejected() {
        let bow = LSLOT.replace(
            "  point: Slot_Offset + Slot2_L, Slot_Offset + Slot2_W\n",
            "  point: Slot_Offset, Slot_Offset + Slot1_L + 1\n",
        );
        assert!(matches!(parse_solid_list(&bow, true), Err(IrError::InvalidShape { .. })));
    }

    #[test]
    fn inconsistent_materials_rejected_before_serialization() {
        let mut sl = parse_solid_list(LSLOT, true).unwrap();
        sl.materials_used.insert("FR-4 (lossy)".into());
        assert_eq!(sl.serialize(), Err(IrError::MaterialsMismatch));
    }

    #[test]
    fn constraints_report_residuals() {
        let env: ParamEnv = [("M_L", 25.08), ("DP_R", 6.58), ("S_L", 31.86), ("x", 3.0)]
            .into_iter()
            .collect();
        let sl = SolidList::new(Vec::new(), env, Vec::new(), true);
        let c = [
            ("S_L".to_string(), parse_expr("M_L + DP_R + 0.2").unwrap()),
            ("x".to_string(), parse_expr("x").unwrap()),
        ];
        let r = validate_constraints(&sl, &c, 1e-9).unwrap();
        assert!(r[0].pass && r[0].residual < 1e-9);
        assert_eq!(r[1].residual, 0.0);

        let mut perturbed = sl.clone();
        perturbed.parameters.set("S_L", 31.9).unwrap();
        let r = validate_constraints(&perturbed, &c[..1], 1e-9).unwrap();
        assert!(!r[0].pass);
        assert!((r[0].residual - 0.04).abs() < 1e-12);

        let bad = [("nope".to_string(), parse_expr("1").unwrap())];
        assert_eq!(
            validate_constraints(&sl, &bad, 1e-9),
            Err(EvalError::UnboundParameter("nope".into()))
        );
    }

    #[test]
    fn first_use_order() {
        let sl = parse_solid_list(LSLOT, true).unwrap();
        assert_eq!(
            sl.params_by_first_use(),
            ["PatchW", "PatchL", "Slot_Offset", "Slot2_L", "Slot2_W", "Slot1_W", "Slot1_L"]
        );
    }
}
