//! C code generation for checked BeePL programs.
//!
//! Expressions are flattened so that every call and allocation lands in a
//! temporary, then printed as C. Arithmetic wraps through unsigned types,
//! division and shifts carry guards that yield zero on the unsafe operand
//! classes, optional pointers are tested against null before use and packet
//! reads follow an explicit bounds check. Two audits re-verify those
//! properties on the output before it is returned.
//!
//! [`Mode::Ebpf`] produces a file for `clang -target bpf`. [`Mode::Host`]
//! adds stub helpers and a `main` that calls the entry point on a fixed
//! packet, which makes the output runnable for differential testing.

pub mod audit;
pub mod cir;
mod emit;
mod lower;
pub mod names;
mod prelude;

use beepl_typecheck::TypedProgram;

pub use cir::{CExpr, CFunction, CStmt, CType};
pub use emit::{CUnit, EmitOptions, HostWorld};
pub use lower::{lit, lower_bop, lower_uop, prim_c};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Mode {
    #[default]
    Ebpf,
    Host,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CgenError {
    #[error("internal code generation error: {0}")]
    Internal(String),
    #[error("generated code failed its audit: {0}")]
    Audit(String),
    #[error("no entry function `{0}`")]
    NoEntry(String),
}

/// eBPF output with default options.
pub fn emit_program(tp: &TypedProgram) -> Result<CUnit, CgenError> {
    emit_program_with(tp, &EmitOptions::default())
}

pub fn emit_program_with(tp: &TypedProgram, opts: &EmitOptions) -> Result<CUnit, CgenError> {
    emit::emit(tp, opts)
}
