//! Point-membership CSG for verifying generated models.
//!
//! A dimensioned solid list is evaluated into primitives and the boolean
//! plan is folded into combinator nodes. Volumes come from exact formulas
//! where the tree decomposes and from seeded Monte-Carlo sampling otherwise.
//!
//! Primitives are closed sets. `Difference` removes only the open interior
//! of its tool, so subtracting an abutting solid keeps the shared face.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::expr::ParamEnv;
use crate::ir::{Axis, BoolKind, EvaluatedShape, IrError, SolidList};

pub mod polygon;
mod volume;

pub use polygon::{polygon_area, Point2, PolygonError};
pub use volume::{
    check_mirror_symmetry, disagreement, exact_volume, mc_chunk, mc_volume, mc_volume_from_tallies,
    ChunkTally, McEstimate, MirrorPlane, MC_CHUNK,
};

pub type Point3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn volume(&self) -> f64 {
        (0..3).map(|i| (self.max[i] - self.min[i]).max(0.0)).product()
    }

    pub fn contains(&self, p: Point3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        let mut out = *self;
        for i in 0..3 {
            out.min[i] = out.min[i].min(other.min[i]);
            out.max[i] = out.max[i].max(other.max[i]);
        }
        out
    }

    /// Overlap box; may be inverted (empty) when the boxes are apart.
    pub fn intersection(&self, other: &Aabb) -> Aabb {
        let mut out = *self;
        for i in 0..3 {
            out.min[i] = out.min[i].max(other.min[i]);
            out.max[i] = out.max[i].min(other.max[i]);
        }
        out
    }

    /// True when the interiors cannot overlap.
    pub fn separated(&self, other: &Aabb) -> bool {
        (0..3).any(|i| self.max[i] <= other.min[i] || other.max[i] <= self.min[i])
    }

    pub fn corners(&self) -> [Point3; 8] {
        let mut out = [[0.0; 3]; 8];
        for (k, c) in out.iter_mut().enumerate() {
            for (i, x) in c.iter_mut().enumerate() {
                *x = if k >> i & 1 == 0 { self.min[i] } else { self.max[i] };
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CsgNode {
    Primitive(EvaluatedShape),
    Union(Box<CsgNode>, Box<CsgNode>),
    Difference(Box<CsgNode>, Box<CsgNode>),
    Intersection(Box<CsgNode>, Box<CsgNode>),
}

/// Splits a point into (in-plane u, in-plane v, along-normal w).
fn plane_coords(normal: Axis, p: Point3) -> (f64, f64, f64) {
    let (a, b) = normal.in_plane();
    (p[a.index()], p[b.index()], p[normal.index()])
}

fn prim_contains(shape: &EvaluatedShape, p: Point3, open: bool) -> bool {
    let inside = |lo: f64, v: f64, hi: f64| {
        if open {
            lo < v && v < hi
        } else {
            lo <= v && v <= hi
        }
    };
    match shape {
        EvaluatedShape::Brick { min, max } => (0..3).all(|i| inside(min[i], p[i], max[i])),
        EvaluatedShape::Cylinder {
            axis,
            center,
            outer_radius,
            inner_radius,
            range,
        } => {
            let (u, v, w) = plane_coords(*axis, p);
            if !inside(range[0], w, range[1]) {
                return false;
            }
            let r2 = (u - center[0]) * (u - center[0]) + (v - center[1]) * (v - center[1]);
            let (ro2, ri2) = (outer_radius * outer_radius, inner_radius * inner_radius);
            if open {
                r2 < ro2 && (*inner_radius == 0.0 || r2 > ri2)
            } else {
                r2 <= ro2 && r2 >= ri2
            }
        }
        EvaluatedShape::Extrude {
            plane,
            polygon,
            base,
            height,
        } => {
            let (u, v, w) = plane_coords(plane.normal(), p);
            if !inside(*base, w, base + height) {
                return false;
            }
            let q = Point2::new(u, v);
            if open {
                polygon::strictly_inside(polygon, q)
            } else {
                polygon::contains_closed(polygon, q)
            }
        }
    }
}

fn prim_bbox(shape: &EvaluatedShape) -> Aabb {
    match shape {
        EvaluatedShape::Brick { min, max } => Aabb {
            min: *min,
            max: *max,
        },
        EvaluatedShape::Cylinder {
            axis,
            center,
            outer_radius,
            range,
            ..
        } => {
            let (a, b) = axis.in_plane();
            let mut bb = Aabb {
                min: [0.0; 3],
                max: [0.0; 3],
            };
            bb.min[a.index()] = center[0] - outer_radius;
            bb.max[a.index()] = center[0] + outer_radius;
            bb.min[b.index()] = center[1] - outer_radius;
            bb.max[b.index()] = center[1] + outer_radius;
            bb.min[axis.index()] = range[0];
            bb.max[axis.index()] = range[1];
            bb
        }
        EvaluatedShape::Extrude {
            plane,
            polygon,
            base,
            height,
        } => {
            let n = plane.normal();
            let (a, b) = n.in_plane();
            let mut bb = Aabb {
                min: [f64::INFINITY; 3],
                max: [f64::NEG_INFINITY; 3],
            };
            for q in polygon {
                bb.min[a.index()] = bb.min[a.index()].min(q.x);
                bb.max[a.index()] = bb.max[a.index()].max(q.x);
                bb.min[b.index()] = bb.min[b.index()].min(q.y);
                bb.max[b.index()] = bb.max[b.index()].max(q.y);
            }
            bb.min[n.index()] = *base;
            bb.max[n.index()] = base + height;
            bb
        }
    }
}

impl CsgNode {
    /// Closed-set membership.
    pub fn contains(&self, p: Point3) -> bool {
        match self {
            CsgNode::Primitive(s) => prim_contains(s, p, false),
            CsgNode::Union(a, b) => a.contains(p) || b.contains(p),
            CsgNode::Difference(a, b) => a.contains(p) && !b.contains_interior(p),
            CsgNode::Intersection(a, b) => a.contains(p) && b.contains(p),
        }
    }

    /// Open-interior membership (conservative for unions of touching solids).
    pub fn contains_interior(&self, p: Point3) -> bool {
        match self {
            CsgNode::Primitive(s) => prim_contains(s, p, true),
            CsgNode::Union(a, b) => a.contains_interior(p) || b.contains_interior(p),
            CsgNode::Difference(a, b) => a.contains_interior(p) && !b.contains(p),
            CsgNode::Intersection(a, b) => a.contains_interior(p) && b.contains_interior(p),
        }
    }

    pub fn bbox(&self) -> Aabb {
        match self {
            CsgNode::Primitive(s) => prim_bbox(s),
            CsgNode::Union(a, b) => a.bbox().union(&b.bbox()),
            CsgNode::Difference(a, _) => a.bbox(),
            CsgNode::Intersection(a, b) => a.bbox().intersection(&b.bbox()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error("boolean step references unknown solid `{0}`")]
    UnknownSolid(String),
    #[error("bounding box has zero volume")]
    EmptyBoundingBox,
}

/// Surviving solids after the boolean plan, in list order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsgModel {
    pub nodes: Vec<(String, CsgNode)>,
}

impl CsgModel {
    pub fn get(&self, name: &str) -> Option<&CsgNode> {
        self.nodes.iter().find(|(n, _)| n == name).map(|(_, node)| node)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Evaluates every solid and folds the boolean plan into its targets.
pub fn build_csg(sl: &SolidList) -> Result<CsgModel, GeomError> {
    build_csg_with(sl, &sl.parameters)
}

/// Like [`build_csg`] but evaluates under `env` instead of the list's parameters.
pub fn build_csg_with(sl: &SolidList, env: &ParamEnv) -> Result<CsgModel, GeomError> {
    let mut nodes: Vec<(String, CsgNode)> = sl
        .evaluate_with(env)?
        .into_iter()
        .map(|(n, s)| (n, CsgNode::Primitive(s)))
        .collect();
    for step in &sl.boolean_plan {
        let tool_idx = nodes
            .iter()
            .position(|(n, _)| *n == step.tool)
            .ok_or_else(|| GeomError::UnknownSolid(step.tool.clone()))?;
        if step.target == step.tool {
            return Err(GeomError::UnknownSolid(step.tool.clone()));
        }
        let (_, tool) = nodes.remove(tool_idx);
        let target_idx = nodes
            .iter()
            .position(|(n, _)| *n == step.target)
            .ok_or_else(|| GeomError::UnknownSolid(step.target.to_string()))?;
        let (name, target) = nodes.remove(target_idx);
        let combined = match step.kind {
            BoolKind::Add => CsgNode::Union(Box::new(target), Box::new(tool)),
            BoolKind::Subtract => CsgNode::Difference(Box::new(target), Box::new(tool)),
            BoolKind::Intersect => CsgNode::Intersection(Box::new(target), Box::new(tool)),
        };
        nodes.insert(target_idx, (name, combined));
    }
    Ok(CsgModel { nodes })
}
