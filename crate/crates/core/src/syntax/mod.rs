//! Concrete syntax: AST, lexer, parser and pretty printer.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;

use std::fmt;

pub use ast::*;
pub use parser::{parse_expr, parse_program, parse_type};
pub use pretty::{pretty_expr, pretty_program, pretty_type};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub span: Span,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.expected.as_slice() {
            [] => write!(f, "unexpected {}", self.found),
            [one] => write!(f, "expected {one}, found {}", self.found),
            many => write!(f, "expected one of {}, found {}", many.join(", "), self.found),
        }
    }
}

impl std::error::Error for ParseError {}
