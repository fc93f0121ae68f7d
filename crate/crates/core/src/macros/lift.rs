//! Rebuilds a dimensioned solid list from parsed macro files, so geometry can
//! be checked along a second route independent of the emitters' input.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use super::{MacroDoc, PolygonBlock, Statement};
use crate::expr::{EnvError, EvalError, ParamEnv};
use crate::ir::{BooleanStep, IrError, Range, Role, ShapeSpec, Solid, SolidList};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LiftError {
    #[error("parameter `{name}`: {source}")]
    Param { name: String, source: EvalError },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("extrusion `{solid}` references unknown curve `{curve}`")]
    UnknownCurve { solid: String, curve: String },
    #[error("boolean references unknown solid `{0}`")]
    UnknownSolid(String),
    #[error(transparent)]
    Ir(#[from] IrError),
}

/// `curve:profile` key of a polygon block.
pub(super) fn profile_key(curve: &str, name: &str) -> String {
    let mut k = String::with_capacity(curve.len() + name.len() + 1);
    k.push_str(curve);
    k.push(':');
    k.push_str(name);
    k
}

/// Geometry of a solid-creating statement. Extrusions need their profile.
pub(super) fn shape_of(stmt: &Statement, profile: Option<&PolygonBlock>) -> Option<ShapeSpec> {
    let range = |(a, b): &(crate::Expr, crate::Expr)| Range::new(a.clone(), b.clone());
    match stmt {
        Statement::Brick(b) => Some(ShapeSpec::Brick {
            x: range(&b.x),
            y: range(&b.y),
            z: range(&b.z),
        }),
        Statement::Cylinder(c) => Some(ShapeSpec::Cylinder {
            axis: c.axis,
            center: c.center.clone(),
            outer_radius: c.outer_radius.clone(),
            inner_radius: c.inner_radius.clone(),
            range: range(&c.range),
        }),
        Statement::Extrude(e) => profile.map(|p| ShapeSpec::Extrude2d {
            plane: p.plane,
            points: p.points.clone(),
            base: p.base.clone(),
            height: e.thickness.clone(),
        }),
        _ => None,
    }
}

/// Reads the documents in order (Para, Materials, 3D, 2D+, Boolean, updates).
///
/// Parameter declarations are evaluated as they appear; later
/// `StoreParameter` lines overwrite values. Roles are unknown at this level
/// and come back as [`Role::Other`].
pub fn solid_list_from_macros(docs: &[MacroDoc]) -> Result<SolidList, LiftError> {
    let mut params = ParamEnv::new();
    let mut profiles: BTreeMap<String, &PolygonBlock> = BTreeMap::new();
    let mut solids: Vec<Solid> = Vec::new();
    let mut plan = Vec::new();
    for stmt in docs.iter().flat_map(|d| &d.statements) {
        match stmt {
            Statement::ParamDecl { name, value } | Statement::StoreParam { name, value } => {
                let v = value.eval(&params).map_err(|source| LiftError::Param {
                    name: name.clone(),
                    source,
                })?;
                if matches!(stmt, Statement::ParamDecl { .. }) && !params.contains(name) {
                    params.declare(name, v)?;
                } else {
                    params.set(name, v)?;
                }
            }
            Statement::Polygon(p) => {
                profiles.insert(profile_key(&p.curve, &p.name), p);
            }
            Statement::Brick(_) | Statement::Cylinder(_) | Statement::Extrude(_) => {
                let (name, component, material, profile) = match stmt {
                    Statement::Brick(b) => (&b.name, &b.component, &b.material, None),
                    Statement::Cylinder(c) => (&c.name, &c.component, &c.material, None),
                    Statement::Extrude(e) => {
                        let key = profile_key(&e.curve, &e.profile);
                        let p = profiles.get(&key).copied().ok_or_else(|| {
                            LiftError::UnknownCurve {
                                solid: e.name.clone(),
                                curve: key.clone(),
                            }
                        })?;
                        (&e.name, &e.component, &e.material, Some(p))
                    }
                    _ => unreachable!(),
                };
                let shape = shape_of(stmt, profile).expect("solid statement");
                let mut solid = Solid::new(name, Role::Other, material, shape);
                solid.component = component.clone();
                solids.push(solid);
            }
            Statement::Boolean(b) => {
                for p in [&b.target, &b.tool] {
                    if !solids.iter().any(|s| s.name == p.name && s.component == p.component) {
                        return Err(LiftError::UnknownSolid(p.to_string()));
                    }
                }
                plan.push(BooleanStep::new(b.kind, &b.target.name, &b.tool.name));
            }
            Statement::Material(_) | Statement::Rebuild => {}
        }
    }
    let sl = SolidList::new(solids, params, plan, true);
    sl.validate()?;
    Ok(sl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{build_csg, exact_volume};
    use crate::ir::parse_solid_list;
    use crate::macros::{emit_2dplus, emit_3d, emit_boolean, emit_para, emit_update_para};

    const LSLOT: &str = include_str!("../../tests/data/lslot_dims.txt");

    fn lslot_docs(sl: &SolidList) -> Vec<MacroDoc> {
        alloc::vec![
            emit_para(&sl.parameters, &sl.params_by_first_use()).unwrap(),
            emit_3d(sl).unwrap(),
            emit_2dplus(sl).unwrap(),
            emit_boolean(&sl.boolean_plan, &sl.solids).unwrap(),
        ]
    }

    #[test]
    fn lslot_lifts_to_same_geometry() {
        let sl = parse_solid_list(LSLOT, true).unwrap();
        let lifted = solid_list_from_macros(&lslot_docs(&sl)).unwrap();
        assert_eq!(lifted.solids.len(), 2);
        let sorted = |e: &ParamEnv| {
            let mut v: Vec<(String, f64)> = e.iter().map(|(n, x)| (n.to_string(), x)).collect();
            v.sort_by(|a, b| a.0.cmp(&b.0));
            v
        };
        assert_eq!(sorted(&lifted.parameters), sorted(&sl.parameters));
        assert_eq!(lifted.boolean_plan, sl.boolean_plan);
        for (a, b) in lifted.solids.iter().zip(&sl.solids) {
            assert_eq!(a.geometry, b.geometry);
        }
        let csg = build_csg(&lifted).unwrap();
        let v = exact_volume(csg.get("patch").unwrap()).unwrap();
        assert!((v - 2.485).abs() < 1e-9, "{v}");
    }

    #[test]
    fn store_parameter_overrides() {
        let sl = parse_solid_list(LSLOT, true).unwrap();
        let mut docs = lslot_docs(&sl);
        let new: ParamEnv = [("PatchW", 12.0)].into_iter().collect();
        docs.push(emit_update_para(&new, &sl.parameters).unwrap());
        let lifted = solid_list_from_macros(&docs).unwrap();
        assert_eq!(lifted.parameters.get("PatchW"), Some(12.0));
    }

    #[test]
    fn missing_profile() {
        let sl = parse_solid_list(LSLOT, true).unwrap();
        let mut docs = lslot_docs(&sl);
        docs[2].statements.remove(0);
        assert!(matches!(
            solid_list_from_macros(&docs),
            Err(LiftError::UnknownCurve { .. })
        ));
    }
}
