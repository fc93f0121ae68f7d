//! Macro documents in the simulator's history-list dialect.
//!
//! One grammar serves both directions: the emitters in [`emit`] build
//! documents from a dimensioned solid list, [`parse_macro`] reads text back
//! (including noisy LLM output), and [`lint_macros`] checks cross-file
//! references. Canonical rendering is frozen: five-space member indentation,
//! LF line endings, every numeric field a quoted expression.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write};

use crate::expr::Expr;
use crate::ir::{Axis, BoolKind, Plane};

pub mod emit;
mod lift;
mod lint;
mod parse;

pub use emit::{
    emit_2dplus, emit_3d, emit_boolean, emit_materials, emit_para, emit_update_para, EmitError,
};
pub use lift::{solid_list_from_macros, LiftError};
pub use lint::{lint_macro, lint_macros, Diagnostic, DiagnosticKind};
pub use parse::{parse_macro, MacroError};

/// `component:name` address of a solid.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SolidPath {
    pub component: String,
    pub name: String,
}

impl SolidPath {
    pub fn new(component: &str, name: &str) -> Self {
        SolidPath {
            component: component.into(),
            name: name.into(),
        }
    }

    pub fn parse(s: &str) -> Option<SolidPath> {
        let (c, n) = s.split_once(':')?;
        if c.is_empty() || n.is_empty() || n.contains(':') {
            return None;
        }
        Some(SolidPath::new(c, n))
    }
}

impl fmt::Display for SolidPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.component, self.name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaterialProps {
    Normal { epsilon: Expr, tan_d: Expr },
    LossyMetal { sigma: Expr },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialBlock {
    pub name: String,
    pub props: MaterialProps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrickBlock {
    pub name: String,
    pub component: String,
    pub material: String,
    pub x: (Expr, Expr),
    pub y: (Expr, Expr),
    pub z: (Expr, Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CylinderBlock {
    pub name: String,
    pub component: String,
    pub material: String,
    pub axis: Axis,
    pub outer_radius: Expr,
    pub inner_radius: Expr,
    /// In-plane centre, cyclic order after the axis (z: x, y; x: y, z; y: z, x).
    pub center: (Expr, Expr),
    pub range: (Expr, Expr),
}

/// A closed profile; `points` repeats the first point last.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonBlock {
    pub name: String,
    pub curve: String,
    pub points: Vec<(Expr, Expr)>,
    /// Non-default values are written as `.Plane` / `.Base` members.
    pub plane: Plane,
    pub base: Expr,
}

impl PolygonBlock {
    pub fn is_closed(&self) -> bool {
        self.points.len() >= 4 && self.points.first() == self.points.last()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtrudeBlock {
    pub name: String,
    pub component: String,
    pub material: String,
    pub thickness: Expr,
    /// `curve:profile` reference to an earlier polygon.
    pub curve: String,
    pub profile: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BooleanCmd {
    pub kind: BoolKind,
    pub target: SolidPath,
    pub tool: SolidPath,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    ParamDecl { name: String, value: Expr },
    Material(MaterialBlock),
    Brick(BrickBlock),
    Cylinder(CylinderBlock),
    Polygon(PolygonBlock),
    Extrude(ExtrudeBlock),
    Boolean(BooleanCmd),
    StoreParam { name: String, value: Expr },
    Rebuild,
}

impl Statement {
    fn is_one_liner(&self) -> bool {
        matches!(
            self,
            Statement::ParamDecl { .. }
                | Statement::Boolean(_)
                | Statement::StoreParam { .. }
                | Statement::Rebuild
        )
    }

    /// Name and path of the solid this statement creates, if any.
    pub fn created_solid(&self) -> Option<SolidPath> {
        match self {
            Statement::Brick(b) => Some(SolidPath::new(&b.component, &b.name)),
            Statement::Cylinder(c) => Some(SolidPath::new(&c.component, &c.name)),
            Statement::Extrude(e) => Some(SolidPath::new(&e.component, &e.name)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MacroDoc {
    pub statements: Vec<Statement>,
}

impl MacroDoc {
    pub fn new(statements: Vec<Statement>) -> Self {
        MacroDoc { statements }
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    /// Canonical text.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{self}");
        out
    }
}

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' {
            out.push('"');
        }
        out.push(c);
    }
    out.push('"');
    out
}

struct Block<'a, 'b> {
    f: &'a mut fmt::Formatter<'b>,
}

impl Block<'_, '_> {
    fn bare(&mut self, member: &str) -> fmt::Result {
        writeln!(self.f, "     .{member}")
    }

    fn text(&mut self, member: &str, v: &str) -> fmt::Result {
        writeln!(self.f, "     .{member} {}", quote(v))
    }

    fn expr(&mut self, member: &str, e: &Expr) -> fmt::Result {
        writeln!(self.f, "     .{member} \"{e}\"")
    }

    fn pair(&mut self, member: &str, (a, b): &(Expr, Expr)) -> fmt::Result {
        writeln!(self.f, "     .{member} \"{a}\", \"{b}\"")
    }
}

fn axis_letter_upper(a: Axis) -> &'static str {
    match a {
        Axis::X => "X",
        Axis::Y => "Y",
        Axis::Z => "Z",
    }
}

fn bool_verb(kind: BoolKind) -> &'static str {
    match kind {
        BoolKind::Add => "Add",
        BoolKind::Subtract => "Subtract",
        BoolKind::Intersect => "Intersect",
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::ParamDecl { name, value } => {
                writeln!(f, "MakeSureParameterExists {}, \"{value}\"", quote(name))
            }
            Statement::StoreParam { name, value } => {
                writeln!(f, "StoreParameter {}, \"{value}\"", quote(name))
            }
            Statement::Rebuild => writeln!(f, "Rebuild"),
            Statement::Boolean(b) => writeln!(
                f,
                "Solid.{} {}, {}",
                bool_verb(b.kind),
                quote(&alloc::format!("{}", b.target)),
                quote(&alloc::format!("{}", b.tool))
            ),
            Statement::Material(m) => {
                writeln!(f, "With Material")?;
                let mut b = Block { f };
                b.bare("Reset")?;
                b.text("Name", &m.name)?;
                match &m.props {
                    MaterialProps::Normal { epsilon, tan_d } => {
                        b.text("Type", "Normal")?;
                        b.expr("Epsilon", epsilon)?;
                        b.expr("TanD", tan_d)?;
                    }
                    MaterialProps::LossyMetal { sigma } => {
                        b.text("Type", "Lossy metal")?;
                        b.expr("Sigma", sigma)?;
                    }
                }
                b.bare("Create")?;
                writeln!(b.f, "End With")
            }
            Statement::Brick(br) => {
                writeln!(f, "With Brick")?;
                let mut b = Block { f };
                b.bare("Reset")?;
                b.text("Name", &br.name)?;
                b.text("Component", &br.component)?;
                b.text("Material", &br.material)?;
                b.pair("Xrange", &br.x)?;
                b.pair("Yrange", &br.y)?;
                b.pair("Zrange", &br.z)?;
                b.bare("Create")?;
                writeln!(b.f, "End With")
            }
            Statement::Cylinder(c) => {
                writeln!(f, "With Cylinder")?;
                let mut b = Block { f };
                b.bare("Reset")?;
                b.text("Name", &c.name)?;
                b.text("Component", &c.component)?;
                b.text("Material", &c.material)?;
                b.text("Axis", c.axis.as_str())?;
                b.expr("Outerradius", &c.outer_radius)?;
                b.expr("Innerradius", &c.inner_radius)?;
                let (u, v) = c.axis.in_plane();
                b.expr(&alloc::format!("{}center", axis_letter_upper(u)), &c.center.0)?;
                b.expr(&alloc::format!("{}center", axis_letter_upper(v)), &c.center.1)?;
                b.pair(&alloc::format!("{}range", axis_letter_upper(c.axis)), &c.range)?;
                b.bare("Create")?;
                writeln!(b.f, "End With")
            }
            Statement::Polygon(p) => {
                writeln!(f, "With Polygon")?;
                let mut b = Block { f };
                b.bare("Reset")?;
                b.text("Name", &p.name)?;
                b.text("Curve", &p.curve)?;
                if p.plane != Plane::Xy {
                    b.text("Plane", p.plane.as_str())?;
                }
                if p.base != Expr::Number(0.0) {
                    b.expr("Base", &p.base)?;
                }
                for (i, pt) in p.points.iter().enumerate() {
                    b.pair(if i == 0 { "Point" } else { "LineTo" }, pt)?;
                }
                writeln!(b.f, "End With")
            }
            Statement::Extrude(e) => {
                writeln!(f, "With ExtrudeCurve")?;
                let mut b = Block { f };
                b.bare("Reset")?;
                b.text("Name", &e.name)?;
                b.text("Component", &e.component)?;
                b.text("Material", &e.material)?;
                b.expr("Thickness", &e.thickness)?;
                b.text("Curve", &alloc::format!("{}:{}", e.curve, e.profile))?;
                b.bare("Create")?;
                writeln!(b.f, "End With")
            }
        }
    }
}

impl fmt::Display for MacroDoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut prev: Option<&Statement> = None;
        for s in &self.statements {
            if let Some(p) = prev {
                let tight = (p.is_one_liner() && s.is_one_liner())
                    || (matches!(p, Statement::Polygon(_)) && matches!(s, Statement::Extrude(_)));
                if !tight {
                    f.write_str("\n")?;
                }
            }
            write!(f, "{s}")?;
            prev = Some(s);
        }
        Ok(())
    }
}
