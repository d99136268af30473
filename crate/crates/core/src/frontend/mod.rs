//! Parser, type checker and pretty-printer for the mini-C input language.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod typecheck;

use crate::ir::Loc;
use thiserror::Error;

pub use parser::parse;
pub use typecheck::{typecheck, TStmt, TypedProgram};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("{loc}: syntax error: {msg}")]
    Syntax { loc: Loc, msg: String },
    #[error("{loc}: unknown identifier `{name}`")]
    UnknownIdent { loc: Loc, name: String },
    #[error("{loc}: unsupported-feature: {what}")]
    Unsupported { loc: Loc, what: String },
    #[error("{loc}: type error: {msg}")]
    Type { loc: Loc, msg: String },
}

impl FrontendError {
    pub fn syntax(loc: Loc, msg: impl Into<String>) -> Self {
        FrontendError::Syntax {
            loc,
            msg: msg.into(),
        }
    }

    pub fn unsupported(loc: Loc, what: &str) -> Self {
        FrontendError::Unsupported {
            loc,
            what: what.to_string(),
        }
    }

    pub fn type_error(loc: Loc, msg: impl Into<String>) -> Self {
        FrontendError::Type {
            loc,
            msg: msg.into(),
        }
    }

    pub fn loc(&self) -> Loc {
        match self {
            FrontendError::Syntax { loc, .. }
            | FrontendError::UnknownIdent { loc, .. }
            | FrontendError::Unsupported { loc, .. }
            | FrontendError::Type { loc, .. } => *loc,
        }
    }

    /// `file:line:col: message` form for the error stream.
    pub fn diagnostic(&self, file: &str) -> String {
        format!("{file}:{self}")
    }
}

/// Parse and type-check in one step.
pub fn load(src: &str, widths: crate::ir::Widths) -> Result<TypedProgram, FrontendError> {
    let ast = parse(src)?;
    typecheck(&ast, widths)
}
