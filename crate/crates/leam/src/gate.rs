//! Validation gates between pipeline stages.
//!
//! A tool's raw response becomes an artifact only if it parses, lints clean
//! and agrees with the artifacts it was derived from. There is no repair:
//! any diagnostic fails the invocation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use leam_core::geom::{build_csg, disagreement, exact_volume};
use leam_core::ir::{parse_solid_list, SolidList};
use leam_core::macros::{
    emit_materials, lint_macros, parse_macro, solid_list_from_macros, Diagnostic, MacroDoc, SolidPath,
    Statement,
};
use leam_core::material::Catalog;
use leam_core::ParamEnv;
use thiserror::Error;

use crate::tools::{ArtifactKind, Tool};

#[derive(Debug, Clone, PartialEq)]
pub enum Parsed {
    SolidList(SolidList),
    Macro(MacroDoc),
}

/// A validated tool output. `text` is the canonical form written to disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub kind: ArtifactKind,
    pub text: String,
    pub parsed: Parsed,
}

impl Artifact {
    pub fn solid_list(&self) -> Option<&SolidList> {
        match &self.parsed {
            Parsed::SolidList(sl) => Some(sl),
            Parsed::Macro(_) => None,
        }
    }

    pub fn macro_doc(&self) -> Option<&MacroDoc> {
        match &self.parsed {
            Parsed::Macro(d) => Some(d),
            Parsed::SolidList(_) => None,
        }
    }

    pub fn from_solid_list(kind: ArtifactKind, sl: SolidList) -> Result<Self, String> {
        let text = sl.serialize().map_err(|e| e.to_string())?;
        Ok(Artifact {
            kind,
            text,
            parsed: Parsed::SolidList(sl),
        })
    }

    pub fn from_macro(kind: ArtifactKind, doc: MacroDoc) -> Self {
        Artifact {
            kind,
            text: doc.render(),
            parsed: Parsed::Macro(doc),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub struct GateFailure {
    pub tool: Tool,
    pub diagnostics: Vec<String>,
}

impl fmt::Display for GateFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} output rejected", self.tool)?;
        for d in &self.diagnostics {
            write!(f, "\n  {d}")?;
        }
        Ok(())
    }
}

/// Samples and seed of the dual-route geometry comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeometryGate {
    pub samples: u64,
    pub seed: u64,
}

impl Default for GeometryGate {
    fn default() -> Self {
        GeometryGate {
            samples: 20_000,
            seed: 42,
        }
    }
}

/// Artifacts accepted so far plus the material library.
pub struct GateContext<'a> {
    pub artifacts: &'a BTreeMap<ArtifactKind, Artifact>,
    pub catalog: &'a Catalog,
    pub geometry: GeometryGate,
}

impl GateContext<'_> {
    fn solid_list(&self, kind: ArtifactKind) -> Option<&SolidList> {
        self.artifacts.get(&kind).and_then(Artifact::solid_list)
    }

    fn doc(&self, kind: ArtifactKind) -> Option<&MacroDoc> {
        self.artifacts.get(&kind).and_then(Artifact::macro_doc)
    }

    /// Earlier macro documents of `kinds`, skipping absent ones.
    fn docs(&self, kinds: &[ArtifactKind]) -> Vec<(ArtifactKind, MacroDoc)> {
        kinds
            .iter()
            .filter_map(|k| self.doc(*k).map(|d| (*k, d.clone())))
            .collect()
    }
}

/// Removes a Markdown code fence around the payload, if there is one.
///
/// Takes the body of the first fenced block; text outside it is discarded.
/// Without a fence the response is used as is.
pub fn strip_fences(raw: &str) -> String {
    let mut lines = raw.lines();
    if !raw.lines().any(|l| l.trim_start().starts_with("```")) {
        return raw.to_string();
    }
    for l in lines.by_ref() {
        if l.trim_start().starts_with("```") {
            break;
        }
    }
    let mut out = String::new();
    for l in lines {
        if l.trim_start().starts_with("```") {
            break;
        }
        out.push_str(l);
        out.push('\n');
    }
    out
}

/// `file N statement M: msg` with the file number replaced by its name.
fn name_diagnostic(d: &Diagnostic, names: &[&str]) -> String {
    let s = d.to_string();
    let msg = s.split_once(": ").map_or(s.as_str(), |(_, m)| m);
    let file = names.get(d.doc).copied().unwrap_or("?");
    format!("{file} statement {}: {msg}", d.statement + 1)
}

fn lint_chain(
    earlier: &[(ArtifactKind, MacroDoc)],
    kind: ArtifactKind,
    doc: &MacroDoc,
    catalog: &Catalog,
) -> Vec<String> {
    let mut docs: Vec<MacroDoc> = earlier.iter().map(|(_, d)| d.clone()).collect();
    let mut names: Vec<&str> = earlier.iter().map(|(k, _)| k.file_name()).collect();
    docs.push(doc.clone());
    names.push(kind.file_name());
    lint_macros(&docs, catalog)
        .iter()
        .map(|d| name_diagnostic(d, &names))
        .collect()
}

fn only(doc: &MacroDoc, allowed: fn(&Statement) -> bool, what: &str) -> Vec<String> {
    doc.statements
        .iter()
        .enumerate()
        .filter(|(_, s)| !allowed(s))
        .map(|(i, _)| format!("statement {}: only {what} belong in this file", i + 1))
        .collect()
}

fn created(doc: &MacroDoc) -> BTreeSet<String> {
    doc.statements
        .iter()
        .filter_map(Statement::created_solid)
        .map(|p| p.to_string())
        .collect()
}

fn expected_paths(dims: &SolidList, three_d: bool) -> BTreeSet<String> {
    dims.solids
        .iter()
        .filter(|s| s.shape.is_3d() == three_d)
        .map(|s| SolidPath::new(&s.component, &s.name).to_string())
        .collect()
}

fn set_diff(expected: &BTreeSet<String>, got: &BTreeSet<String>, what: &str) -> Vec<String> {
    let mut out: Vec<String> = expected
        .difference(got)
        .map(|n| format!("missing {what} `{n}`"))
        .collect();
    out.extend(got.difference(expected).map(|n| format!("unexpected {what} `{n}`")));
    out
}

/// Parameter values declared by a Para document, in order.
pub fn para_values(doc: &MacroDoc) -> Result<ParamEnv, String> {
    let mut env = ParamEnv::new();
    for s in &doc.statements {
        if let Statement::ParamDecl { name, value } = s {
            let v = value.eval(&env).map_err(|e| format!("parameter `{name}`: {e}"))?;
            env.declare(name, v).map_err(|e| e.to_string())?;
        }
    }
    Ok(env)
}

/// Compares the dimensioned list with the solids the macro files build.
///
/// Both routes are folded into CSG trees; every surviving solid must match
/// in name, in sampled membership and, where both are decomposable, in
/// exact volume.
pub fn geometry_agreement(dims: &SolidList, docs: &[MacroDoc], gate: GeometryGate) -> Vec<String> {
    let lifted = match solid_list_from_macros(docs) {
        Ok(sl) => sl,
        Err(e) => return vec![format!("macro files do not describe a model: {e}")],
    };
    let (a, b) = match (build_csg(dims), build_csg(&lifted)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return vec![format!("geometry: {e}")],
    };
    let names = |m: &leam_core::geom::CsgModel| -> BTreeSet<String> {
        m.nodes.iter().map(|(n, _)| n.clone()).collect()
    };
    let mut out = set_diff(&names(&a), &names(&b), "solid after booleans");
    for (name, na) in &a.nodes {
        let Some(nb) = b.get(name) else { continue };
        let frac = disagreement(na, nb, gate.samples, gate.seed);
        if frac != 0.0 {
            out.push(format!("solid `{name}`: membership differs on {frac} of samples"));
        }
        if let (Some(va), Some(vb)) = (exact_volume(na), exact_volume(nb)) {
            if (va - vb).abs() > 1e-9 * va.abs().max(1.0) {
                out.push(format!("solid `{name}`: volume {va} from the list, {vb} from the macros"));
            }
        }
    }
    out
}

fn parse_doc(body: &str) -> Result<MacroDoc, Vec<String>> {
    parse_macro(body).map_err(|e| vec![e.to_string()])
}

fn check(tool: Tool, diags: Vec<String>) -> Result<(), GateFailure> {
    if diags.is_empty() {
        Ok(())
    } else {
        Err(GateFailure {
            tool,
            diagnostics: diags,
        })
    }
}

/// Parses, lints and cross-checks a raw response of `tool`.
pub fn validate_output(tool: Tool, raw: &str, ctx: &GateContext<'_>) -> Result<Artifact, GateFailure> {
    let fail = |diagnostics: Vec<String>| GateFailure { tool, diagnostics };
    let body = strip_fences(raw);
    let kind = tool.output();
    let missing = |k: ArtifactKind| fail(vec![format!("missing input artifact {k}")]);
    use ArtifactKind as K;
    match tool {
        Tool::WeakD2S | Tool::StrongD2S => {
            let sl = parse_solid_list(&body, false).map_err(|e| fail(vec![e.to_string()]))?;
            let diags: Vec<String> = sl
                .materials_used
                .iter()
                .filter_map(|m| ctx.catalog.lookup(m).err().map(|e| e.to_string()))
                .collect();
            check(tool, diags)?;
            Artifact::from_solid_list(kind, sl).map_err(|e| fail(vec![e]))
        }
        Tool::Dimension => {
            let dims = parse_solid_list(&body, true).map_err(|e| fail(vec![e.to_string()]))?;
            let stage1 = ctx.solid_list(K::SolidList).ok_or_else(|| missing(K::SolidList))?;
            let para = ctx.doc(K::Para).ok_or_else(|| missing(K::Para))?;
            let mut diags = Vec::new();
            let names = |sl: &SolidList| sl.solids.iter().map(|s| s.name.clone()).collect::<Vec<_>>();
            if names(&dims) != names(stage1) {
                diags.push(format!(
                    "solids {:?} differ from the solid list {:?}",
                    names(&dims),
                    names(stage1)
                ));
            }
            for (d, s) in dims.solids.iter().zip(&stage1.solids) {
                if d.name == s.name
                    && (d.role != s.role || d.material != s.material || d.shape != s.shape)
                {
                    diags.push(format!("solid `{}` changed role, material or shape", d.name));
                }
            }
            match para_values(para) {
                Ok(env) => {
                    let sorted = |e: &ParamEnv| {
                        let mut v: Vec<(String, f64)> = e.iter().map(|(n, x)| (n.to_string(), x)).collect();
                        v.sort_by(|a, b| a.0.cmp(&b.0));
                        v
                    };
                    if sorted(&dims.parameters) != sorted(&env) {
                        diags.push("parameters differ from Para.bas".into());
                    }
                }
                Err(e) => diags.push(e),
            }
            check(tool, diags)?;
            Artifact::from_solid_list(kind, dims).map_err(|e| fail(vec![e]))
        }
        Tool::Parameterize => {
            let doc = parse_doc(&body).map_err(fail)?;
            let mut diags = only(&doc, |s| matches!(s, Statement::ParamDecl { .. }), "parameter declarations");
            if doc.is_empty() {
                diags.push("no parameters declared".into());
            }
            diags.extend(lint_chain(&[], kind, &doc, ctx.catalog));
            check(tool, diags)?;
            Ok(Artifact::from_macro(kind, doc))
        }
        Tool::Materials => {
            let doc = parse_doc(&body).map_err(fail)?;
            let stage1 = ctx.solid_list(K::SolidList).ok_or_else(|| missing(K::SolidList))?;
            let mut diags = only(&doc, |s| matches!(s, Statement::Material(_)), "material definitions");
            diags.extend(lint_chain(&[], kind, &doc, ctx.catalog));
            match emit_materials(&stage1.materials_used, ctx.catalog) {
                Ok(expected) => {
                    for s in &doc.statements {
                        if !expected.statements.contains(s) {
                            if let Statement::Material(m) = s {
                                diags.push(format!("material `{}` disagrees with the library", m.name));
                            }
                        }
                    }
                    for s in &expected.statements {
                        if !doc.statements.contains(s) {
                            if let Statement::Material(m) = s {
                                diags.push(format!("material `{}` is not defined", m.name));
                            }
                        }
                    }
                }
                Err(e) => diags.push(e.to_string()),
            }
            check(tool, diags)?;
            Ok(Artifact::from_macro(kind, doc))
        }
        Tool::Model3D | Tool::Model2DPlus => {
            let doc = parse_doc(&body).map_err(fail)?;
            let dims = ctx.solid_list(K::SolidsDims).ok_or_else(|| missing(K::SolidsDims))?;
            let three_d = tool == Tool::Model3D;
            let mut diags = if three_d {
                only(&doc, |s| matches!(s, Statement::Brick(_) | Statement::Cylinder(_)), "bricks and cylinders")
            } else {
                only(&doc, |s| matches!(s, Statement::Polygon(_) | Statement::Extrude(_)), "polygons and extrusions")
            };
            diags.extend(lint_chain(&ctx.docs(&[K::Para, K::Materials]), kind, &doc, ctx.catalog));
            diags.extend(set_diff(&expected_paths(dims, three_d), &created(&doc), "solid"));
            check(tool, diags)?;
            Ok(Artifact::from_macro(kind, doc))
        }
        Tool::Boolean => {
            let doc = parse_doc(&body).map_err(fail)?;
            let dims = ctx.solid_list(K::SolidsDims).ok_or_else(|| missing(K::SolidsDims))?;
            let earlier = ctx.docs(&[K::Para, K::Materials, K::Model3D, K::Model2DPlus]);
            let mut diags = only(&doc, |s| matches!(s, Statement::Boolean(_)), "boolean operations");
            diags.extend(lint_chain(&earlier, kind, &doc, ctx.catalog));
            let plan: Vec<String> = doc
                .statements
                .iter()
                .filter_map(|s| match s {
                    Statement::Boolean(b) => Some(format!("{} {} {}", b.kind.as_str(), b.target.name, b.tool.name)),
                    _ => None,
                })
                .collect();
            let expected: Vec<String> = dims
                .boolean_plan
                .iter()
                .map(|b| format!("{} {} {}", b.kind.as_str(), b.target, b.tool))
                .collect();
            if plan != expected {
                diags.push(format!("boolean steps {plan:?} differ from the plan {expected:?}"));
            }
            if diags.is_empty() {
                let mut docs: Vec<MacroDoc> = earlier.into_iter().map(|(_, d)| d).collect();
                docs.push(doc.clone());
                diags.extend(geometry_agreement(dims, &docs, ctx.geometry));
            }
            check(tool, diags)?;
            Ok(Artifact::from_macro(kind, doc))
        }
        Tool::UpdatePara => {
            let doc = parse_doc(&body).map_err(fail)?;
            let earlier = ctx.docs(&ArtifactKind::MACROS);
            let mut diags = only(
                &doc,
                |s| matches!(s, Statement::StoreParam { .. } | Statement::Rebuild),
                "StoreParameter lines and Rebuild",
            );
            if doc.statements.last() != Some(&Statement::Rebuild)
                || doc.statements.iter().filter(|s| **s == Statement::Rebuild).count() != 1
            {
                diags.push("expected a single closing Rebuild".into());
            }
            diags.extend(lint_chain(&earlier, kind, &doc, ctx.catalog));
            check(tool, diags)?;
            Ok(Artifact::from_macro(kind, doc))
        }
    }
}
