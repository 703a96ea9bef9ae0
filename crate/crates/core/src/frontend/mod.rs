//! Lexing, parsing and type checking of kernel source.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod typeck;

use ast::{KernelAst, Span};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrontendError {
    #[error("{span}: error: {message}")]
    Lex { span: Span, message: String },
    #[error("{span}: error: {message}")]
    Parse { span: Span, message: String, expected: Vec<String> },
    #[error("{span}: error: {message}")]
    Restriction { span: Span, message: String },
    #[error("{span}: error: {message}")]
    Type { span: Span, message: String },
}

impl FrontendError {
    pub fn span(&self) -> Span {
        match self {
            FrontendError::Lex { span, .. }
            | FrontendError::Parse { span, .. }
            | FrontendError::Restriction { span, .. }
            | FrontendError::Type { span, .. } => *span,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            FrontendError::Lex { message, .. }
            | FrontendError::Parse { message, .. }
            | FrontendError::Restriction { message, .. }
            | FrontendError::Type { message, .. } => message,
        }
    }

    /// `file:line:col: error: message`
    pub fn diagnostic(&self, file: &str) -> String {
        format!("{file}:{self}")
    }

    /// Move an error found inside a sub-token (pragma payload) to the token's position.
    pub(crate) fn relocate(self, span: Span) -> Self {
        match self {
            FrontendError::Lex { message, .. } => FrontendError::Lex { span, message },
            FrontendError::Parse { message, expected, .. } => FrontendError::Parse { span, message, expected },
            FrontendError::Restriction { message, .. } => FrontendError::Restriction { span, message },
            FrontendError::Type { message, .. } => FrontendError::Type { span, message },
        }
    }
}

/// Tokenize, parse and type check in one go.
pub fn compile_source(source: &str) -> Result<KernelAst, FrontendError> {
    let tokens = lexer::tokenize(source)?;
    let ast = parser::parse(tokens)?;
    typeck::typecheck(ast)
}
