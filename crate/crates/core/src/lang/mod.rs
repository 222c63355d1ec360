//! The transactional mini-language: syntax tree, parser, printer, checks and normalization.

pub mod ast;
mod check;
mod compile;
mod normalize;
mod parser;
mod printer;

pub use ast::*;
pub use check::{well_formed, Diagnostic};
pub use compile::{compile, CExpr, CProc, CTest, CTxn, Compiled};
pub use normalize::{normalize, normalize_txn, NormalizeError};
pub use parser::{parse, parse_expr, ParseError, KEYWORDS};
pub use printer::{expr_to_string, print, stmt_to_string, txn_to_string};
