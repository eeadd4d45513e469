//! Shared vocabulary of the BeePL toolchain: syntax trees, types, effects,
//! runtime values and memory layout.

pub mod ast;
pub mod effect;
pub mod types;
pub mod value;

pub use ast::{
    fvar, BlockId, Bop, CallConv, Composite, Decl, Dir, Expr, ExprKind, ExtDecl, FrameId,
    FunDecl, GlobDecl, GlobInit, Pattern, PrimOp, Program, Span, Uop,
};
pub use effect::{EffAtom, Effect};
pub use types::{
    alignof, field_layout, sizeof, struct_layout, FieldLayout, IntSize, LayoutError, PrimTy, Sign, StructTable, Ty,
};
pub use value::{BytesView, IntVal, Value};
