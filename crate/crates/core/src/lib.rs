//! Algorithmic core of the LEAM antenna-modeling toolchain.
//!
//! Everything in this crate is pure: text in, values out. File access,
//! LLM backends and the command line live in the `leam` crate.
//!
//! - [`expr`]: the dimension expression language and parameter environments.
//! - [`ir`]: solid lists (stage 1) and dimensioned solid lists (stage 2).
//! - [`material`]: the material catalog.
//! - [`macros`]: macro documents, their emitters, parser and linter.
//! - [`geom`]: point-membership CSG used to verify generated models.
//! - [`design`]: transmission-line patch sizing.
//! - [`checks`]: model-level checks (constraints, symmetry, orderings).

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod checks;
pub mod design;
pub mod expr;
pub mod geom;
pub mod ir;
pub mod macros;
pub mod material;
mod text;

pub use expr::{Expr, ParamEnv};
pub use text::trimmed;
