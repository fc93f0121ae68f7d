use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use super::{
    BooleanCmd, BrickBlock, CylinderBlock, ExtrudeBlock, MacroDoc, MaterialBlock, MaterialProps,
    PolygonBlock, SolidPath, Statement,
};
use crate::expr::{is_identifier, parse_expr, Expr, ParseError};
use crate::ir::{Axis, BoolKind, Plane};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MacroError {
    #[error("line {line}: expected {expected}")]
    Syntax { line: usize, expected: String },
    #[error("line {line}: unknown block kind `{kind}`")]
    UnknownBlockKind { line: usize, kind: String },
    #[error("line {line}: unknown member `.{member}` in `With {block}`")]
    UnknownMember {
        line: usize,
        block: String,
        member: String,
    },
    #[error("line {line}: {source}")]
    Expr { line: usize, source: ParseError },
}

fn syntax(line: usize, expected: impl Into<String>) -> MacroError {
    MacroError::Syntax {
        line,
        expected: expected.into(),
    }
}

/// Drops a `'` comment that is not inside a string.
fn strip_vba_comment(line: &str) -> &str {
    let mut in_str = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_str = !in_str,
            '\'' if !in_str => return &line[..i],
            _ => {}
        }
    }
    line
}

/// Comma-separated quoted strings with `""` escapes.
fn parse_args(text: &str, line: usize) -> Result<Vec<String>, MacroError> {
    let mut out = Vec::new();
    let mut chars = text.trim().chars().peekable();
    if chars.peek().is_none() {
        return Ok(out);
    }
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        if chars.next() != Some('"') {
            return Err(syntax(line, "quoted argument"));
        }
        let mut s = String::new();
        loop {
            match chars.next() {
                Some('"') if chars.peek() == Some(&'"') => {
                    chars.next();
                    s.push('"');
                }
                Some('"') => break,
                Some(c) => s.push(c),
                None => return Err(syntax(line, "closing quote")),
            }
        }
        out.push(s);
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        match chars.next() {
            None => return Ok(out),
            Some(',') => {}
            Some(_) => return Err(syntax(line, "`,` between arguments")),
        }
    }
}

fn expr(text: &str, line: usize) -> Result<Expr, MacroError> {
    parse_expr(text).map_err(|source| MacroError::Expr { line, source })
}

struct Member {
    line: usize,
    name: String,
    args: Vec<String>,
}

struct BlockBody {
    kind: &'static str,
    start: usize,
    members: Vec<Member>,
}

impl BlockBody {
    fn take(&mut self, name: &str) -> Option<Member> {
        let i = self.members.iter().position(|m| m.name == name)?;
        Some(self.members.remove(i))
    }

    fn args(&mut self, name: &str, n: usize) -> Result<Option<(usize, Vec<String>)>, MacroError> {
        match self.take(name) {
            None => Ok(None),
            Some(m) if m.args.len() == n => Ok(Some((m.line, m.args))),
            Some(m) => Err(syntax(m.line, format!(".{name} with {n} argument(s)"))),
        }
    }

    fn required(&mut self, name: &str, n: usize) -> Result<(usize, Vec<String>), MacroError> {
        self.args(name, n)?
            .ok_or_else(|| syntax(self.start, format!(".{name} in `With {}`", self.kind)))
    }

    fn text(&mut self, name: &str) -> Result<String, MacroError> {
        let (_, mut a) = self.required(name, 1)?;
        Ok(a.remove(0))
    }

    fn expr(&mut self, name: &str) -> Result<Expr, MacroError> {
        let (line, a) = self.required(name, 1)?;
        expr(&a[0], line)
    }

    fn pair(&mut self, name: &str) -> Result<(Expr, Expr), MacroError> {
        let (line, a) = self.required(name, 2)?;
        Ok((expr(&a[0], line)?, expr(&a[1], line)?))
    }

    fn finish(self) -> Result<(), MacroError> {
        match self.members.into_iter().next() {
            None => Ok(()),
            Some(m) => Err(syntax(m.line, format!("one `.{}` per block", m.name))),
        }
    }
}

const MATERIAL: &[&str] = &["Reset", "Name", "Type", "Epsilon", "TanD", "Sigma", "Create"];
const BRICK: &[&str] = &[
    "Reset", "Name", "Component", "Material", "Xrange", "Yrange", "Zrange", "Create",
];
const CYLINDER: &[&str] = &[
    "Reset",
    "Name",
    "Component",
    "Material",
    "Axis",
    "Outerradius",
    "Innerradius",
    "Xcenter",
    "Ycenter",
    "Zcenter",
    "Xrange",
    "Yrange",
    "Zrange",
    "Create",
];
const POLYGON: &[&str] = &["Reset", "Name", "Curve", "Plane", "Base", "Point", "LineTo"];
const EXTRUDE: &[&str] = &[
    "Reset",
    "Name",
    "Component",
    "Material",
    "Thickness",
    "Curve",
    "Create",
];

fn block_kind(kind: &str) -> Option<(&'static str, &'static [&'static str])> {
    Some(match kind {
        "Material" => ("Material", MATERIAL),
        "Brick" => ("Brick", BRICK),
        "Cylinder" => ("Cylinder", CYLINDER),
        "Polygon" => ("Polygon", POLYGON),
        "ExtrudeCurve" => ("ExtrudeCurve", EXTRUDE),
        _ => return None,
    })
}

fn axis_upper(a: Axis) -> &'static str {
    match a {
        Axis::X => "X",
        Axis::Y => "Y",
        Axis::Z => "Z",
    }
}

fn build(mut b: BlockBody) -> Result<Statement, MacroError> {
    // `.Reset` is optional; `.Create` presence was checked while reading.
    b.take("Reset");
    b.take("Create");
    let stmt = match b.kind {
        "Material" => {
            let name = b.text("Name")?;
            let (line, ty) = b.required("Type", 1)?;
            let props = match ty[0].as_str() {
                "Normal" => MaterialProps::Normal {
                    epsilon: b.expr("Epsilon")?,
                    tan_d: b.expr("TanD")?,
                },
                "Lossy metal" => MaterialProps::LossyMetal {
                    sigma: b.expr("Sigma")?,
                },
                _ => return Err(syntax(line, "material type \"Normal\" or \"Lossy metal\"")),
            };
            Statement::Material(MaterialBlock { name, props })
        }
        "Brick" => Statement::Brick(BrickBlock {
            name: b.text("Name")?,
            component: b.text("Component")?,
            material: b.text("Material")?,
            x: b.pair("Xrange")?,
            y: b.pair("Yrange")?,
            z: b.pair("Zrange")?,
        }),
        "Cylinder" => {
            let name = b.text("Name")?;
            let component = b.text("Component")?;
            let material = b.text("Material")?;
            let (line, a) = b.required("Axis", 1)?;
            let axis: Axis = a[0].parse().map_err(|_| syntax(line, "axis x, y or z"))?;
            let outer_radius = b.expr("Outerradius")?;
            let inner_radius = b.expr("Innerradius")?;
            let (u, v) = axis.in_plane();
            let cu = b.expr(&format!("{}center", axis_upper(u)))?;
            let cv = b.expr(&format!("{}center", axis_upper(v)))?;
            let range = b.pair(&format!("{}range", axis_upper(axis)))?;
            Statement::Cylinder(CylinderBlock {
                name,
                component,
                material,
                axis,
                outer_radius,
                inner_radius,
                center: (cu, cv),
                range,
            })
        }
        "Polygon" => {
            let name = b.text("Name")?;
            let curve = b.text("Curve")?;
            let plane = match b.args("Plane", 1)? {
                None => Plane::Xy,
                Some((line, a)) => a[0].parse().map_err(|_| syntax(line, "plane xy, yz or zx"))?,
            };
            let base = match b.args("Base", 1)? {
                None => Expr::Number(0.0),
                Some((line, a)) => expr(&a[0], line)?,
            };
            let mut points = Vec::new();
            let start = b.start;
            let first = b.pair("Point").map_err(|_| syntax(start, "one .Point"))?;
            points.push(first);
            // `.LineTo` members keep their original order.
            let mut rest = Vec::new();
            b.members.retain(|m| {
                if m.name == "LineTo" {
                    rest.push((m.line, m.args.clone()));
                    false
                } else {
                    true
                }
            });
            for (line, a) in rest {
                if a.len() != 2 {
                    return Err(syntax(line, ".LineTo with 2 arguments"));
                }
                points.push((expr(&a[0], line)?, expr(&a[1], line)?));
            }
            Statement::Polygon(PolygonBlock {
                name,
                curve,
                points,
                plane,
                base,
            })
        }
        _ => {
            let name = b.text("Name")?;
            let component = b.text("Component")?;
            let material = b.text("Material")?;
            let thickness = b.expr("Thickness")?;
            let (line, c) = b.required("Curve", 1)?;
            let (curve, profile) = c[0]
                .split_once(':')
                .filter(|(c, p)| !c.is_empty() && !p.is_empty())
                .ok_or_else(|| syntax(line, "curve reference `curve:profile`"))?;
            Statement::Extrude(ExtrudeBlock {
                name,
                component,
                material,
                thickness,
                curve: curve.to_string(),
                profile: profile.to_string(),
            })
        }
    };
    b.finish()?;
    Ok(stmt)
}

fn one_liner(head: &str, rest: &str, line: usize) -> Result<Option<Statement>, MacroError> {
    let name_value = |rest: &str| -> Result<(String, Expr), MacroError> {
        let a = parse_args(rest, line)?;
        if a.len() != 2 || !is_identifier(&a[0]) {
            return Err(syntax(line, "\"name\", \"value\""));
        }
        Ok((a[0].clone(), expr(&a[1], line)?))
    };
    let stmt = match head {
        "MakeSureParameterExists" => {
            let (name, value) = name_value(rest)?;
            Statement::ParamDecl { name, value }
        }
        "StoreParameter" => {
            let (name, value) = name_value(rest)?;
            Statement::StoreParam { name, value }
        }
        "Rebuild" if rest.trim().is_empty() => Statement::Rebuild,
        "Solid.Add" | "Solid.Subtract" | "Solid.Intersect" => {
            let kind = match head {
                "Solid.Add" => BoolKind::Add,
                "Solid.Subtract" => BoolKind::Subtract,
                _ => BoolKind::Intersect,
            };
            let a = parse_args(rest, line)?;
            let path = |s: &str| SolidPath::parse(s).ok_or_else(|| syntax(line, "`component:name`"));
            if a.len() != 2 {
                return Err(syntax(line, "two solid paths"));
            }
            Statement::Boolean(BooleanCmd {
                kind,
                target: path(&a[0])?,
                tool: path(&a[1])?,
            })
        }
        _ => return Ok(None),
    };
    Ok(Some(stmt))
}

/// Parses macro text. Whitespace, blank lines, CRLF, `'` comments and member
/// order are all tolerated; unknown members and missing `.Create` are not.
pub fn parse_macro(text: &str) -> Result<MacroDoc, MacroError> {
    let mut statements = Vec::new();
    let mut block: Option<(BlockBody, &'static [&'static str], bool)> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = strip_vba_comment(raw).trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some((body, allowed, created)) = block.as_mut() {
            if trimmed == "End With" {
                let (body, _, created) = block.take().unwrap();
                if body.kind != "Polygon" && !created {
                    return Err(syntax(line, format!(".Create before `End With` in `With {}`", body.kind)));
                }
                statements.push(build(body)?);
                continue;
            }
            let member = trimmed
                .strip_prefix('.')
                .ok_or_else(|| syntax(line, "`.Member` or `End With`"))?;
            let (name, args) = match member.find(|c: char| c.is_whitespace()) {
                Some(i) => (&member[..i], &member[i..]),
                None => (member, ""),
            };
            if !allowed.contains(&name) {
                return Err(MacroError::UnknownMember {
                    line,
                    block: body.kind.to_string(),
                    member: name.to_string(),
                });
            }
            if *created {
                return Err(syntax(line, "`End With` after .Create"));
            }
            if name == "Create" {
                *created = true;
            }
            body.members.push(Member {
                line,
                name: name.to_string(),
                args: parse_args(args, line)?,
            });
            continue;
        }
        if let Some(kind) = trimmed.strip_prefix("With ") {
            let kind = kind.trim();
            let (kind, allowed) = block_kind(kind).ok_or_else(|| MacroError::UnknownBlockKind {
                line,
                kind: kind.to_string(),
            })?;
            block = Some((
                BlockBody {
                    kind,
                    start: line,
                    members: Vec::new(),
                },
                allowed,
                false,
            ));
            continue;
        }
        let (head, rest) = match trimmed.find(|c: char| c.is_whitespace()) {
            Some(i) => (&trimmed[..i], &trimmed[i..]),
            None => (trimmed, ""),
        };
        match one_liner(head, rest, line)? {
            Some(s) => statements.push(s),
            None => return Err(syntax(line, "a statement or `With` block")),
        }
    }
    if let Some((body, _, _)) = block {
        return Err(syntax(body.start, format!("`End With` closing `With {}`", body.kind)));
    }
    Ok(MacroDoc::new(statements))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_solid_list;
    use crate::macros::{emit_2dplus, emit_3d, emit_boolean, emit_para};

    const LSLOT: &str = include_str!("../../tests/data/lslot_dims.txt");

    #[test]
    fn boolean_round_trip() {
        let doc = parse_macro("Solid.Subtract \"component1:patch\", \"component1:slot\"\n").unwrap();
        assert_eq!(
            doc.statements,
            [Statement::Boolean(BooleanCmd {
                kind: BoolKind::Subtract,
                target: SolidPath::new("component1", "patch"),
                tool: SolidPath::new("component1", "slot"),
            })]
        );
    }

    #[test]
    fn emitted_lslot_files_round_trip() {
        let sl = parse_solid_list(LSLOT, true).unwrap();
        for doc in [
            emit_para(&sl.parameters, &sl.params_by_first_use()).unwrap(),
            emit_3d(&sl).unwrap(),
            emit_2dplus(&sl).unwrap(),
            emit_boolean(&sl.boolean_plan, &sl.solids).unwrap(),
        ] {
            let text = doc.render();
            let back = parse_macro(&text).unwrap();
            assert_eq!(back, doc);
            assert_eq!(back.render(), text);
            let crlf = text.replace('\n', "\r\n");
            assert_eq!(parse_macro(&crlf).unwrap(), doc);
        }
    }

    #[test]
    fn noisy_input_is_accepted() {
        let text = "' header comment\n  With Brick\n\t.Name \"b\"\n .Material \"Copper (pure)\"\n .Component \"component1\"\n .Zrange \"0\",\"1\"\n .Yrange \"0\" , \"1\" ' y\n .Xrange \"0\", \"a*2\"\n .Create\n End With\n";
        let doc = parse_macro(text).unwrap();
        let Statement::Brick(b) = &doc.statements[0] else {
            panic!()
        };
        assert_eq!(b.x.1.to_string(), "a * 2");
    }

    #[test]
    fn missing_create_is_a_syntax_error() {
        let text = "With Brick\n     .Name \"b\"\n     .Component \"c\"\n     .Material \"m\"\n     .Xrange \"0\", \"1\"\n     .Yrange \"0\", \"1\"\n     .Zrange \"0\", \"1\"\nEnd With\n";
        assert!(matches!(parse_macro(text), Err(MacroError::Syntax { line: 8, .. })));
    }

    #[test]
    fn rejections() {
        assert!(matches!(
            parse_macro("With Brick\n     .Color \"red\"\n"),
            Err(MacroError::UnknownMember { line: 2, .. })
        ));
        assert!(matches!(
            parse_macro("With Sphere\nEnd With\n"),
            Err(MacroError::UnknownBlockKind { .. })
        ));
        assert!(matches!(
            parse_macro("MakeSureParameterExists \"a\", \"1 +\"\n"),
            Err(MacroError::Expr { line: 1, .. })
        ));
        assert!(parse_macro("With Brick\n     .Name \"b\"\n").is_err());
        assert!(parse_macro("Solid.Add \"a\", \"c:b\"\n").is_err());
        assert!(parse_macro("Dim x As Integer\n").is_err());
        assert!(parse_macro("With Polygon\n     .Reset\n     .Name \"p\"\n     .Curve \"c\"\n     .Create\nEnd With\n").is_err());
    }

    #[test]
    fn quotes_are_escaped() {
        let text = "With Material\n     .Reset\n     .Name \"say \"\"hi\"\"\"\n     .Type \"Lossy metal\"\n     .Sigma \"1\"\n     .Create\nEnd With\n";
        let doc = parse_macro(text).unwrap();
        let Statement::Material(m) = &doc.statements[0] else {
            panic!()
        };
        assert_eq!(m.name, "say \"hi\"");
        assert_eq!(doc.render(), text);
    }
}
