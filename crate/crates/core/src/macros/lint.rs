//! Cross-reference checks over macro documents. Diagnostics are data: a
//! clean document set yields an empty list.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::lift::{profile_key, shape_of};
use super::{MacroDoc, PolygonBlock, SolidPath, Statement};
use crate::expr::{Expr, ParamEnv};
use crate::ir::ShapeError;
use crate::material::Catalog;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagnosticKind {
    UnboundParameter(String),
    UnknownMaterial(String),
    UnknownSolid(String),
    ConsumedSolid(String),
    DuplicateSolid(String),
    ShadowedParameter(String),
    NonPositiveThickness(String),
    OpenPolygon(String),
    UnknownCurve(String),
    UnknownStoreParameter(String),
    InvalidGeometry { solid: String, message: String },
}

/// A finding at statement `statement` of document `doc` (both zero-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub doc: usize,
    pub statement: usize,
    pub kind: DiagnosticKind,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "file {} statement {}: ", self.doc + 1, self.statement + 1)?;
        match &self.kind {
            DiagnosticKind::UnboundParameter(n) => write!(f, "unbound parameter `{n}`"),
            DiagnosticKind::UnknownMaterial(n) => write!(f, "unknown material `{n}`"),
            DiagnosticKind::UnknownSolid(n) => write!(f, "unknown solid `{n}`"),
            DiagnosticKind::ConsumedSolid(n) => {
                write!(f, "solid `{n}` was already consumed by a boolean")
            }
            DiagnosticKind::DuplicateSolid(n) => write!(f, "solid `{n}` created twice"),
            DiagnosticKind::ShadowedParameter(n) => {
                write!(f, "parameter `{n}` declared more than once")
            }
            DiagnosticKind::NonPositiveThickness(n) => {
                write!(f, "extrusion `{n}` has non-positive thickness")
            }
            DiagnosticKind::OpenPolygon(n) => write!(f, "polygon `{n}` is not closed"),
            DiagnosticKind::UnknownCurve(n) => write!(f, "unknown curve `{n}`"),
            DiagnosticKind::UnknownStoreParameter(n) => {
                write!(f, "StoreParameter for undeclared parameter `{n}`")
            }
            DiagnosticKind::InvalidGeometry { solid, message } => {
                write!(f, "solid `{solid}`: {message}")
            }
        }
    }
}

#[derive(Default)]
struct State<'a> {
    params: ParamEnv,
    declared: BTreeSet<String>,
    materials: BTreeSet<String>,
    /// Solid path to "still alive".
    solids: BTreeMap<SolidPath, bool>,
    profiles: BTreeMap<String, &'a PolygonBlock>,
    out: Vec<Diagnostic>,
}

impl<'a> State<'a> {
    fn report(&mut self, doc: usize, statement: usize, kind: DiagnosticKind) {
        self.out.push(Diagnostic {
            doc,
            statement,
            kind,
        });
    }

    /// Reports unbound names; true when every name is bound.
    fn bound<'e>(&mut self, at: (usize, usize), exprs: impl IntoIterator<Item = &'e Expr>) -> bool {
        let mut missing = BTreeSet::new();
        for e in exprs {
            e.visit_params(&mut |n| {
                if !self.params.contains(n) {
                    missing.insert(n.to_string());
                }
            });
        }
        let ok = missing.is_empty();
        for n in missing {
            self.report(at.0, at.1, DiagnosticKind::UnboundParameter(n));
        }
        ok
    }

    fn material(&mut self, at: (usize, usize), catalog: &Catalog, name: &str) {
        if !self.materials.contains(name) && catalog.lookup(name).is_err() {
            self.report(at.0, at.1, DiagnosticKind::UnknownMaterial(name.to_string()));
        }
    }

    fn statement(&mut self, at: (usize, usize), stmt: &'a Statement, catalog: &Catalog) {
        let (d, s) = at;
        match stmt {
            Statement::ParamDecl { name, value } => {
                if !self.declared.insert(name.clone()) {
                    self.report(d, s, DiagnosticKind::ShadowedParameter(name.clone()));
                }
                if self.bound(at, [value]) {
                    if let Ok(v) = value.eval(&self.params) {
                        let _ = self.params.set(name, v);
                    }
                }
            }
            Statement::StoreParam { name, value } => {
                if !self.params.contains(name) {
                    self.report(d, s, DiagnosticKind::UnknownStoreParameter(name.clone()));
                } else if self.bound(at, [value]) {
                    if let Ok(v) = value.eval(&self.params) {
                        let _ = self.params.set(name, v);
                    }
                }
            }
            Statement::Rebuild => {}
            Statement::Material(m) => {
                if catalog.lookup(&m.name).is_err() {
                    self.report(d, s, DiagnosticKind::UnknownMaterial(m.name.clone()));
                }
                self.materials.insert(m.name.clone());
            }
            Statement::Polygon(p) => {
                let exprs = p.points.iter().flat_map(|(a, b)| [a, b]).chain([&p.base]);
                self.bound(at, exprs);
                if !p.is_closed() {
                    self.report(d, s, DiagnosticKind::OpenPolygon(p.name.clone()));
                }
                self.profiles.insert(profile_key(&p.curve, &p.name), p);
            }
            Statement::Brick(_) | Statement::Cylinder(_) | Statement::Extrude(_) => {
                self.solid(at, stmt, catalog)
            }
            Statement::Boolean(b) => {
                for (path, consumes) in [(&b.target, false), (&b.tool, true)] {
                    match self.solids.get_mut(path) {
                        None => self.report(d, s, DiagnosticKind::UnknownSolid(path.to_string())),
                        Some(false) => {
                            self.report(d, s, DiagnosticKind::ConsumedSolid(path.to_string()))
                        }
                        Some(alive) => {
                            if consumes {
                                *alive = false;
                            }
                        }
                    }
                }
            }
        }
    }

    fn solid(&mut self, at: (usize, usize), stmt: &'a Statement, catalog: &Catalog) {
        let (d, s) = at;
        let path = stmt.created_solid().expect("solid statement");
        let (material, profile) = match stmt {
            Statement::Brick(b) => (&b.material, None),
            Statement::Cylinder(c) => (&c.material, None),
            Statement::Extrude(e) => {
                let key = profile_key(&e.curve, &e.profile);
                let p = self.profiles.get(&key).copied();
                if p.is_none() {
                    self.report(d, s, DiagnosticKind::UnknownCurve(key));
                }
                (&e.material, p)
            }
            _ => return,
        };
        self.material(at, catalog, material);
        if self.solids.insert(path.clone(), true).is_some() {
            self.report(d, s, DiagnosticKind::DuplicateSolid(path.to_string()));
        }
        if let Statement::Extrude(e) = stmt {
            if self.bound(at, [&e.thickness]) {
                match e.thickness.eval(&self.params) {
                    Ok(t) if t > 0.0 => {}
                    _ => {
                        self.report(d, s, DiagnosticKind::NonPositiveThickness(e.name.clone()));
                        return;
                    }
                }
            }
        }
        let Some(shape) = shape_of(stmt, profile) else {
            return;
        };
        if !self.bound(at, shape.exprs()) {
            return;
        }
        match shape.evaluate(&self.params) {
            Ok(_) | Err(ShapeError::OpenPolygon) | Err(ShapeError::Eval(_)) => {}
            Err(ShapeError::Invalid(message)) => self.report(
                d,
                s,
                DiagnosticKind::InvalidGeometry {
                    solid: path.name,
                    message,
                },
            ),
        }
    }
}

/// Lints one document against parameters that are already defined.
pub fn lint_macro(doc: &MacroDoc, known_params: &ParamEnv, catalog: &Catalog) -> Vec<Diagnostic> {
    let mut st = State {
        params: known_params.clone(),
        ..State::default()
    };
    for (i, stmt) in doc.statements.iter().enumerate() {
        st.statement((0, i), stmt, catalog);
    }
    st.out
}

/// Lints the concatenation of `docs`, in order; references must not run ahead
/// of definitions.
pub fn lint_macros(docs: &[MacroDoc], catalog: &Catalog) -> Vec<Diagnostic> {
    let mut st = State::default();
    for (d, doc) in docs.iter().enumerate() {
        for (i, stmt) in doc.statements.iter().enumerate() {
            st.statement((d, i), stmt, catalog);
        }
    }
    st.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse_solid_list, BoolKind};
    use crate::macros::{
        emit_2dplus, emit_3d, emit_boolean, emit_materials, emit_para, parse_macro, BooleanCmd,
    };

    const LSLOT: &str = include_str!("../../tests/data/lslot_dims.txt");
    const CATALOG: &str = "material Copper (pure)\n  type: conductor\n  conductivity: 5.96e7\n";

    fn docs() -> (Vec<MacroDoc>, Catalog) {
        let sl = parse_solid_list(LSLOT, true).unwrap();
        let cat = Catalog::parse(CATALOG).unwrap();
        let docs = alloc::vec![
            emit_para(&sl.parameters, &sl.params_by_first_use()).unwrap(),
            emit_materials(&sl.materials_used, &cat).unwrap(),
            emit_3d(&sl).unwrap(),
            emit_2dplus(&sl).unwrap(),
            emit_boolean(&sl.boolean_plan, &sl.solids).unwrap(),
        ];
        (docs, cat)
    }

    #[test]
    fn lslot_is_clean() {
        let (docs, cat) = docs();
        assert_eq!(lint_macros(&docs, &cat), []);
    }

    #[test]
    fn absent_boolean_operand() {
        let (mut docs, cat) = docs();
        docs[4].statements.push(Statement::Boolean(BooleanCmd {
            kind: BoolKind::Add,
            target: SolidPath::new("component1", "patch"),
            tool: SolidPath::new("component1", "ghost"),
        }));
        let diags = lint_macros(&docs, &cat);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].kind, DiagnosticKind::UnknownSolid("component1:ghost".into()));
        assert_eq!((diags[0].doc, diags[0].statement), (4, 1));
    }

    #[test]
    fn reused_tool_is_consumed() {
        let (mut docs, cat) = docs();
        let again = docs[4].statements[0].clone();
        docs[4].statements.push(again);
        let diags = lint_macros(&docs, &cat);
        assert_eq!(diags.len(), 1);
        assert!(matches!(diags[0].kind, DiagnosticKind::ConsumedSolid(_)));
    }

    #[test]
    fn shadowed_declaration() {
        let doc = parse_macro(
            "MakeSureParameterExists \"a\", \"1\"\nMakeSureParameterExists \"a\", \"2\"\n",
        )
        .unwrap();
        let diags = lint_macro(&doc, &ParamEnv::new(), &Catalog::default());
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].kind, DiagnosticKind::ShadowedParameter("a".into()));
    }

    #[test]
    fn single_doc_findings() {
        let (docs, cat) = docs();
        let diags = lint_macro(&docs[2], &ParamEnv::new(), &cat);
        assert_eq!(
            diags.iter().map(|d| &d.kind).collect::<Vec<_>>(),
            [
                &DiagnosticKind::UnboundParameter("PatchL".into()),
                &DiagnosticKind::UnboundParameter("PatchW".into()),
            ]
        );
        let diags = lint_macro(&docs[2], &docs_params(), &Catalog::default());
        assert_eq!(diags[0].kind, DiagnosticKind::UnknownMaterial("Copper (pure)".into()));
    }

    fn docs_params() -> ParamEnv {
        parse_solid_list(LSLOT, true).unwrap().parameters
    }

    #[test]
    fn thickness_and_geometry() {
        let (mut docs, cat) = docs();
        if let Statement::Extrude(e) = &mut docs[3].statements[1] {
            e.thickness = Expr::num(-1.0);
        }
        if let Statement::Brick(b) = &mut docs[2].statements[0] {
            b.x = (Expr::num(5.0), Expr::num(1.0));
        }
        let kinds: Vec<_> = lint_macros(&docs, &cat).into_iter().map(|d| d.kind).collect();
        assert!(matches!(kinds[0], DiagnosticKind::InvalidGeometry { .. }));
        assert_eq!(kinds[1], DiagnosticKind::NonPositiveThickness("slot".into()));
        assert_eq!(kinds.len(), 2);
    }

    #[test]
    fn unknown_store_parameter() {
        let doc = parse_macro("StoreParameter \"zz\", \"1\"\nRebuild\n").unwrap();
        let diags = lint_macro(&doc, &docs_params(), &Catalog::default());
        assert_eq!(diags[0].kind, DiagnosticKind::UnknownStoreParameter("zz".into()));
    }
}
