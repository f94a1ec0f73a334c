//! Lexing, parsing and typechecking of `.fpl` sources.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod span;
pub mod typeck;
pub mod types;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use parser::parse;
pub use printer::print_program;
pub use span::{Pos, Span};
pub use typeck::typecheck;
pub use types::*;

/// A syntax error with the set of tokens that would have been accepted.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: parse error: {message}")]
pub struct ParseError {
    pub span: Span,
    pub message: String,
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn new(span: Span, message: String, expected: Vec<String>) -> Self {
        ParseError { span, message, expected }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TypeErrorKind {
    TypeMismatch,
    UnknownIdentifier,
    FpModuloUnsupported,
    NoeqViolation,
    MissingContract,
    Unsupported,
}

impl TypeErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            TypeErrorKind::TypeMismatch => "type-mismatch",
            TypeErrorKind::UnknownIdentifier => "unknown-identifier",
            TypeErrorKind::FpModuloUnsupported => "fp-modulo-unsupported",
            TypeErrorKind::NoeqViolation => "noeq-violation",
            TypeErrorKind::MissingContract => "missing-contract",
            TypeErrorKind::Unsupported => "unsupported",
        }
    }
}

impl fmt::Display for TypeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {kind}: {message}")]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub span: Span,
    pub message: String,
    pub hint: Option<String>,
}

/// A rendered diagnostic: `file:line:col: kind: message`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub file: String,
    pub span: Span,
    pub kind: String,
    pub message: String,
    pub hint: Option<String>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}: {}: {}", self.file, self.span.line, self.span.col, self.kind, self.message)?;
        if let Some(h) = &self.hint {
            write!(f, "\n  hint: {h}")?;
        }
        Ok(())
    }
}

impl Diagnostic {
    pub fn from_parse(file: &str, e: &ParseError) -> Self {
        Diagnostic { file: file.into(), span: e.span, kind: "parse-error".into(), message: e.message.clone(), hint: None }
    }

    pub fn from_type(file: &str, e: &TypeError) -> Self {
        Diagnostic { file: file.into(), span: e.span, kind: e.kind.name().into(), message: e.message.clone(), hint: e.hint.clone() }
    }
}

/// Parses and typechecks one source file, rendering failures as diagnostics.
pub fn load(file: &str, source: &str) -> Result<TypedProgram, Vec<Diagnostic>> {
    let program = parse(source).map_err(|e| vec![Diagnostic::from_parse(file, &e)])?;
    typecheck(&program).map_err(|errs| errs.iter().map(|e| Diagnostic::from_type(file, e)).collect())
}
