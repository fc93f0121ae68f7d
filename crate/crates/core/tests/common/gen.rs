//! Seeded generators for round-trip tests. Each generator is a pure function
//! of its seed, so a failing case can be replayed from the seed alone.

#![allow(dead_code)]

use leam_core::expr::{BinOp, Expr, ParamEnv};
use leam_core::ir::{Axis, BoolKind, BooleanStep, Plane, Range, Role, ShapeSpec, Solid, SolidList};
use leam_core::macros::{
    BooleanCmd, BrickBlock, CylinderBlock, ExtrudeBlock, MacroDoc, MaterialBlock, MaterialProps,
    PolygonBlock, SolidPath, Statement,
};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub struct Gen(ChaCha8Rng);

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }

    pub fn chance(&mut self, num: usize, den: usize) -> bool {
        self.below(den) < num
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len())]
    }

    /// Short non-negative decimal such as `12`, `0.5` or `3.125`.
    pub fn decimal(&mut self) -> f64 {
        let mantissa = self.below(100_000) as f64;
        let scale = [1.0, 10.0, 100.0, 1000.0][self.below(4)];
        mantissa / scale
    }

    pub fn positive(&mut self) -> f64 {
        (1 + self.below(9999)) as f64 / 100.0
    }

    /// Literal in `0..20` with up to two decimals, for compact geometry.
    pub fn small(&mut self) -> f64 {
        self.below(2000) as f64 / [100.0, 1000.0][self.below(2)]
    }

    /// Scale factor in `(0, 4)`.
    pub fn factor(&mut self) -> f64 {
        (1 + self.below(399)) as f64 / 100.0
    }
}

// ---------------------------------------------------------------- expressions

pub const PARAM_NAMES: [&str; 8] = ["PatchW", "PatchL", "x1", "x20", "_g", "SL", "DP_R", "h"];

/// Environment binding every name in [`PARAM_NAMES`].
pub fn oracle_env() -> ParamEnv {
    let values = [38.0, 28.0, 0.5, 14.75, -2.25, 30.0, 6.58, 1.6];
    PARAM_NAMES.iter().copied().zip(values).collect()
}

/// Independent expression tree used as the evaluation oracle.
#[derive(Debug, Clone)]
pub enum Oracle {
    Num(f64),
    Var(&'static str),
    Neg(Box<Oracle>),
    Bin(char, Box<Oracle>, Box<Oracle>),
}

impl Oracle {
    pub fn random(g: &mut Gen, depth: usize) -> Oracle {
        let leaf = depth == 0 || g.chance(1, 4);
        if leaf {
            return if g.chance(1, 2) {
                Oracle::Num(g.decimal())
            } else {
                Oracle::Var(g.pick(&PARAM_NAMES))
            };
        }
        if g.chance(1, 6) {
            return Oracle::Neg(Box::new(Oracle::random(g, depth - 1)));
        }
        let op = *g.pick(&['+', '-', '*', '/']);
        Oracle::Bin(
            op,
            Box::new(Oracle::random(g, depth - 1)),
            Box::new(Oracle::random(g, depth - 1)),
        )
    }

    /// Fully parenthesized text; independent of the library printer.
    pub fn text(&self) -> String {
        match self {
            Oracle::Num(v) => format!("{v}"),
            Oracle::Var(n) => n.to_string(),
            Oracle::Neg(e) => format!("(-{})", e.text()),
            Oracle::Bin(op, a, b) => format!("({} {op} {})", a.text(), b.text()),
        }
    }

    /// `None` on division by zero or a non-finite result.
    pub fn eval(&self) -> Option<f64> {
        let env = oracle_env();
        self.eval_in(&|n| env.get(n).unwrap())
    }

    fn eval_in(&self, lookup: &dyn Fn(&str) -> f64) -> Option<f64> {
        let v = match self {
            Oracle::Num(v) => *v,
            Oracle::Var(n) => lookup(n),
            Oracle::Neg(e) => -e.eval_in(lookup)?,
            Oracle::Bin(op, a, b) => {
                let (a, b) = (a.eval_in(lookup)?, b.eval_in(lookup)?);
                match op {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    _ if b == 0.0 => return None,
                    _ => a / b,
                }
            }
        };
        v.is_finite().then_some(v)
    }

    /// The library AST with the same structure.
    pub fn to_expr(&self) -> Expr {
        match self {
            Oracle::Num(v) => Expr::Number(*v),
            Oracle::Var(n) => Expr::param(*n),
            Oracle::Neg(e) => Expr::Neg(Box::new(e.to_expr())),
            Oracle::Bin(op, a, b) => {
                let op = match op {
                    '+' => BinOp::Add,
                    '-' => BinOp::Sub,
                    '*' => BinOp::Mul,
                    _ => BinOp::Div,
                };
                Expr::binary(op, a.to_expr(), b.to_expr())
            }
        }
    }
}

// ---------------------------------------------------------------- solid lists

pub const MATERIALS: [&str; 4] = ["Copper (pure)", "FR-4 (lossy)", "Rogers RT5880 (lossy)", "PEC"];

/// Expression that evaluates to a finite number: a literal, a parameter, or a
/// parameter shifted or scaled by a literal.
fn offset_expr(g: &mut Gen, params: &[String]) -> Expr {
    let p = Expr::param(g.pick(params).as_str());
    match g.below(5) {
        0 => Expr::num(g.small()),
        1 => p,
        2 => Expr::binary(BinOp::Add, p, Expr::num(g.small())),
        3 => Expr::binary(BinOp::Sub, p, Expr::num(g.small())),
        _ => Expr::binary(BinOp::Mul, p, Expr::num(g.factor())),
    }
}

/// Strictly positive expression.
fn positive_expr(g: &mut Gen, params: &[String]) -> Expr {
    match g.below(3) {
        0 => Expr::num(g.factor()),
        1 => Expr::param(g.pick(params).as_str()),
        _ => Expr::binary(
            BinOp::Mul,
            Expr::param(g.pick(params).as_str()),
            Expr::num(g.factor()),
        ),
    }
}

fn range(g: &mut Gen, params: &[String]) -> Range {
    let lo = offset_expr(g, params);
    let hi = Expr::binary(BinOp::Add, lo.clone(), positive_expr(g, params));
    Range::new(lo, hi)
}

/// Convex polygon: a rounded regular n-gon around a parametric centre.
fn polygon(g: &mut Gen, params: &[String]) -> Vec<(Expr, Expr)> {
    let n = 3 + g.below(6);
    let radius = 5.0 + g.below(20) as f64;
    let cx = offset_expr(g, params);
    let cy = offset_expr(g, params);
    let phase = g.below(360) as f64;
    let shift = |c: &Expr, d: f64| {
        let d = (d * 1000.0).round() / 1000.0;
        if d >= 0.0 {
            Expr::binary(BinOp::Add, c.clone(), Expr::num(d))
        } else {
            Expr::binary(BinOp::Sub, c.clone(), Expr::num(-d))
        }
    };
    let mut pts: Vec<(Expr, Expr)> = (0..n)
        .map(|k| {
            let t = (phase + 360.0 * k as f64 / n as f64).to_radians();
            (shift(&cx, radius * t.cos()), shift(&cy, radius * t.sin()))
        })
        .collect();
    pts.push(pts[0].clone());
    pts
}

fn shape(g: &mut Gen, params: &[String]) -> ShapeSpec {
    match g.below(3) {
        0 => ShapeSpec::Brick {
            x: range(g, params),
            y: range(g, params),
            z: range(g, params),
        },
        1 => {
            let inner = if g.chance(1, 2) {
                Expr::num(0.0)
            } else {
                positive_expr(g, params)
            };
            let outer = Expr::binary(BinOp::Add, inner.clone(), positive_expr(g, params));
            ShapeSpec::Cylinder {
                axis: *g.pick(&[Axis::X, Axis::Y, Axis::Z]),
                center: (offset_expr(g, params), offset_expr(g, params)),
                outer_radius: outer,
                inner_radius: inner,
                range: range(g, params),
            }
        }
        _ => ShapeSpec::Extrude2d {
            plane: *g.pick(&[Plane::Xy, Plane::Yz, Plane::Zx]),
            points: polygon(g, params),
            base: offset_expr(g, params),
            height: positive_expr(g, params),
        },
    }
}

const NON_SLOT: [Role; 6] = [
    Role::Substrate,
    Role::Patch,
    Role::Feedline,
    Role::Ground,
    Role::Stub,
    Role::Other,
];

/// A valid dimensioned list: 1..=6 parameters, 1..=6 solids and a boolean
/// plan that never reuses a consumed tool.
pub fn dimensioned_list(g: &mut Gen) -> SolidList {
    let n_params = 1 + g.below(6);
    let mut env = ParamEnv::new();
    let mut names = Vec::new();
    for i in 0..n_params {
        let name = format!("{}{i}", g.pick(&["P", "Slot_W", "x", "gap"]));
        env.declare(&name, g.factor() * 5.0).unwrap();
        names.push(name);
    }
    let n_solids = 1 + g.below(6);
    let mut solids: Vec<Solid> = (0..n_solids)
        .map(|i| {
            let mut s = Solid::new(
                &format!("s{i}_{}", g.pick(&["patch", "slot", "sub", "feed"])),
                *g.pick(&NON_SLOT),
                g.pick(&MATERIALS),
                shape(g, &names),
            );
            if g.chance(1, 4) {
                s.component = "component2".into();
            }
            s
        })
        .collect();
    let mut alive: Vec<usize> = (0..n_solids).collect();
    let mut plan = Vec::new();
    while alive.len() >= 2 && g.chance(2, 3) {
        let ti = g.below(alive.len());
        let target = alive[ti];
        let mut ki = g.below(alive.len() - 1);
        if ki >= ti {
            ki += 1;
        }
        let tool = alive.remove(ki);
        let kind = *g.pick(&[BoolKind::Add, BoolKind::Subtract, BoolKind::Intersect]);
        if kind == BoolKind::Subtract && g.chance(1, 2) {
            solids[tool].role = Role::Slot;
        }
        plan.push(BooleanStep::new(kind, &solids[target].name, &solids[tool].name));
    }
    SolidList::new(solids, env, plan, true)
}

/// A stage-1 list: names, roles, materials, shape kinds and position notes.
pub fn stage_one_list(g: &mut Gen) -> SolidList {
    let mut list = dimensioned_list(g);
    for s in &mut list.solids {
        s.geometry = None;
        if g.chance(1, 2) {
            s.position = Some(g.pick(&["on top of the substrate", "centred, 2 mm gap", "below (ground)"]).to_string());
        }
        if s.role == Role::Slot && g.chance(1, 2) {
            s.role = Role::Other;
        }
    }
    list.parameters = ParamEnv::new();
    list.boolean_plan.clear();
    list.dimensioned = false;
    list
}

// ---------------------------------------------------------------- macros

fn quoted_name(g: &mut Gen) -> String {
    g.pick(&["patch", "Copper (pure)", "say \"hi\"", "a'b", "sub strate", "x"]).to_string()
}

fn ident(g: &mut Gen) -> String {
    format!("{}{}", g.pick(&["p", "PatchW", "x", "S_L"]), g.below(30))
}

fn any_expr(g: &mut Gen) -> Expr {
    Oracle::random(g, 3).to_expr()
}

fn pair(g: &mut Gen) -> (Expr, Expr) {
    (any_expr(g), any_expr(g))
}

fn path(g: &mut Gen) -> SolidPath {
    SolidPath::new(g.pick(&["component1", "comp 2"]), g.pick(&["patch", "slot", "a b"]))
}

/// A syntactically valid document; references need not resolve.
pub fn macro_doc(g: &mut Gen) -> MacroDoc {
    let n = g.below(12);
    let mut statements = Vec::new();
    for _ in 0..n {
        let s = match g.below(9) {
            0 => Statement::ParamDecl {
                name: ident(g),
                value: any_expr(g),
            },
            1 => Statement::StoreParam {
                name: ident(g),
                value: any_expr(g),
            },
            2 => Statement::Rebuild,
            3 => Statement::Boolean(BooleanCmd {
                kind: *g.pick(&[BoolKind::Add, BoolKind::Subtract, BoolKind::Intersect]),
                target: path(g),
                tool: path(g),
            }),
            4 => Statement::Material(MaterialBlock {
                name: quoted_name(g),
                props: if g.chance(1, 2) {
                    MaterialProps::Normal {
                        epsilon: any_expr(g),
                        tan_d: any_expr(g),
                    }
                } else {
                    MaterialProps::LossyMetal { sigma: any_expr(g) }
                },
            }),
            5 => Statement::Brick(BrickBlock {
                name: quoted_name(g),
                component: quoted_name(g),
                material: quoted_name(g),
                x: pair(g),
                y: pair(g),
                z: pair(g),
            }),
            6 => Statement::Cylinder(CylinderBlock {
                name: quoted_name(g),
                component: quoted_name(g),
                material: quoted_name(g),
                axis: *g.pick(&[Axis::X, Axis::Y, Axis::Z]),
                outer_radius: any_expr(g),
                inner_radius: any_expr(g),
                center: pair(g),
                range: pair(g),
            }),
            7 => {
                let k = 1 + g.below(8);
                let points = (0..k).map(|_| pair(g)).collect();
                Statement::Polygon(PolygonBlock {
                    name: "profile".into(),
                    curve: "curve1".into(),
                    points,
                    plane: *g.pick(&[Plane::Xy, Plane::Yz, Plane::Zx]),
                    base: if g.chance(1, 2) {
                        Expr::Number(0.0)
                    } else {
                        any_expr(g)
                    },
                })
            }
            _ => Statement::Extrude(ExtrudeBlock {
                name: quoted_name(g),
                component: quoted_name(g),
                material: quoted_name(g),
                thickness: any_expr(g),
                curve: "curve1".into(),
                profile: g.pick(&["profile", "slot curve"]).to_string(),
            }),
        };
        statements.push(s);
    }
    MacroDoc::new(statements)
}
