//! Emitters for the six macro files: parameters, materials, 3D solids,
//! extruded profiles, booleans and parameter updates.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use super::{
    BooleanCmd, BrickBlock, CylinderBlock, ExtrudeBlock, MacroDoc, MaterialBlock, MaterialProps,
    PolygonBlock, SolidPath, Statement,
};
use crate::expr::{Expr, ParamEnv};
use crate::ir::{BooleanStep, ShapeSpec, Solid, SolidList};
use crate::material::{Catalog, CatalogError, MaterialKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmitError {
    #[error("no parameters to emit")]
    EmptyParameters,
    #[error(transparent)]
    UnknownMaterial(#[from] CatalogError),
    #[error("solid `{0}` has no dimensions")]
    Undimensioned(String),
    #[error("solid `{0}`: polygon is not closed")]
    OpenPolygon(String),
    #[error("boolean step references unknown solid `{0}`")]
    UnknownSolid(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
}

/// One declaration per parameter: names in `first_use` order, then the rest by name.
pub fn emit_para(params: &ParamEnv, first_use: &[String]) -> Result<MacroDoc, EmitError> {
    if params.is_empty() {
        return Err(EmitError::EmptyParameters);
    }
    let mut order: Vec<&str> = Vec::with_capacity(params.len());
    for n in first_use {
        if params.contains(n) && !order.contains(&n.as_str()) {
            order.push(n);
        }
    }
    let mut rest: Vec<&str> = params.names().filter(|n| !order.contains(n)).collect();
    rest.sort_unstable();
    order.extend(rest);
    let statements = order
        .into_iter()
        .map(|name| Statement::ParamDecl {
            name: name.to_string(),
            value: Expr::num(params.get(name).unwrap_or_default()),
        })
        .collect();
    Ok(MacroDoc::new(statements))
}

/// One block per material, in catalog order.
pub fn emit_materials(used: &BTreeSet<String>, catalog: &Catalog) -> Result<MacroDoc, EmitError> {
    for name in used {
        catalog.lookup(name)?;
    }
    let statements = catalog
        .records()
        .iter()
        .filter(|r| used.contains(&r.name))
        .map(|r| {
            let props = match r.kind {
                MaterialKind::Normal {
                    epsilon_r,
                    tan_delta,
                } => MaterialProps::Normal {
                    epsilon: Expr::num(epsilon_r),
                    tan_d: Expr::num(tan_delta),
                },
                MaterialKind::Conductor { conductivity } => MaterialProps::LossyMetal {
                    sigma: Expr::num(conductivity),
                },
            };
            Statement::Material(MaterialBlock {
                name: r.name.clone(),
                props,
            })
        })
        .collect();
    Ok(MacroDoc::new(statements))
}

fn geometry(s: &Solid) -> Result<&ShapeSpec, EmitError> {
    s.geometry
        .as_ref()
        .ok_or_else(|| EmitError::Undimensioned(s.name.clone()))
}

/// Bricks and cylinders, in list order. Extruded solids are skipped.
pub fn emit_3d(sl: &SolidList) -> Result<MacroDoc, EmitError> {
    let mut statements = Vec::new();
    for s in &sl.solids {
        match geometry(s)? {
            ShapeSpec::Brick { x, y, z } => statements.push(Statement::Brick(BrickBlock {
                name: s.name.clone(),
                component: s.component.clone(),
                material: s.material.clone(),
                x: (x.min.clone(), x.max.clone()),
                y: (y.min.clone(), y.max.clone()),
                z: (z.min.clone(), z.max.clone()),
            })),
            ShapeSpec::Cylinder {
                axis,
                center,
                outer_radius,
                inner_radius,
                range,
            } => statements.push(Statement::Cylinder(CylinderBlock {
                name: s.name.clone(),
                component: s.component.clone(),
                material: s.material.clone(),
                axis: *axis,
                outer_radius: outer_radius.clone(),
                inner_radius: inner_radius.clone(),
                center: center.clone(),
                range: (range.min.clone(), range.max.clone()),
            })),
            ShapeSpec::Extrude2d { .. } => {}
        }
    }
    Ok(MacroDoc::new(statements))
}

pub const PROFILE_CURVE: &str = "curve1";

/// A polygon plus an extrusion for every extruded solid.
pub fn emit_2dplus(sl: &SolidList) -> Result<MacroDoc, EmitError> {
    let mut statements = Vec::new();
    for s in &sl.solids {
        if let ShapeSpec::Extrude2d {
            plane,
            points,
            base,
            height,
        } = geometry(s)?
        {
            if points.len() < 4 || points.first() != points.last() {
                return Err(EmitError::OpenPolygon(s.name.clone()));
            }
            let profile = format!("{}curve", s.name);
            statements.push(Statement::Polygon(PolygonBlock {
                name: profile.clone(),
                curve: PROFILE_CURVE.to_string(),
                points: points.clone(),
                plane: *plane,
                base: base.clone(),
            }));
            statements.push(Statement::Extrude(ExtrudeBlock {
                name: s.name.clone(),
                component: s.component.clone(),
                material: s.material.clone(),
                thickness: height.clone(),
                curve: PROFILE_CURVE.to_string(),
                profile,
            }));
        }
    }
    Ok(MacroDoc::new(statements))
}

/// One command per step, order preserved. Paths come from `solids`.
pub fn emit_boolean(plan: &[BooleanStep], solids: &[Solid]) -> Result<MacroDoc, EmitError> {
    let path = |name: &str| {
        solids
            .iter()
            .find(|s| s.name == name)
            .map(|s| SolidPath::new(&s.component, &s.name))
            .ok_or_else(|| EmitError::UnknownSolid(name.to_string()))
    };
    let statements = plan
        .iter()
        .map(|step| {
            Ok(Statement::Boolean(BooleanCmd {
                kind: step.kind,
                target: path(&step.target)?,
                tool: path(&step.tool)?,
            }))
        })
        .collect::<Result<Vec<_>, EmitError>>()?;
    Ok(MacroDoc::new(statements))
}

/// `StoreParameter` for each value that differs from `current`, then `Rebuild`.
pub fn emit_update_para(new_values: &ParamEnv, current: &ParamEnv) -> Result<MacroDoc, EmitError> {
    let mut statements = Vec::new();
    for (name, value) in new_values.iter() {
        let old = current
            .get(name)
            .ok_or_else(|| EmitError::UnknownParameter(name.to_string()))?;
        if old != value {
            statements.push(Statement::StoreParam {
                name: name.to_string(),
                value: Expr::num(value),
            });
        }
    }
    statements.push(Statement::Rebuild);
    Ok(MacroDoc::new(statements))
}
