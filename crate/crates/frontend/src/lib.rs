//! BeePL surface syntax: tokens, parser, pretty-printer and diagnostics.

// Diagnostics are returned by value on every error path; they are rare.
#![allow(clippy::result_large_err)]

pub mod diag;
pub mod lexer;
pub mod parser;
pub mod printer;

pub use diag::{Diagnostic, Severity};
pub use lexer::{tokenize, TokKind, Token};
pub use parser::{parse_expr, parse_program, parse_ty};
pub use printer::{print_expr, print_program, print_ty, PrintError};
