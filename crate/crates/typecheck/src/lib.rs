//! Type-and-effect checking for BeePL.
//!
//! [`check_program`] validates declarations and returns an elaborated
//! [`TypedProgram`]. [`infer_expr`] types a single expression, including the
//! runtime forms that appear while a program is being evaluated.

#![allow(clippy::result_large_err)]

mod context;
mod derivation;
mod expr;
mod program;
mod registry;

pub use context::{FunSig, TypingContext};
pub use derivation::{audit, derive, Derivation};
pub use expr::{elaborate_expr, infer_expr, infer_expr_normalized, Checker, TResult};
pub use program::{check_fun_decl, check_program, check_program_with, check_source, section_ok, TypedFunDecl, TypedProgram};
pub use registry::{default_helper_registry, map_ptr, HelperRegistry, HelperSig, MAP_STRUCT};
