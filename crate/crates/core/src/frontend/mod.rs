//! Lex, parse, classify, and pretty-print the supported Solidity subset.

pub mod ast;
pub mod calls;
pub mod error;
mod lexer;
mod parser;
mod printer;

pub use ast::*;
pub use calls::{classify_call, is_low_confidence, resolve_function, CallKind};
pub use error::{ParseError, PrintError};
pub use parser::parse;
pub use printer::{print, print_expression, print_statement};
