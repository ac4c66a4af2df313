//! Text formats: models (`.mdl`), test purposes (`.purposes`), weave
//! configurations (`.weave`) and test cases (`.tc`).

pub mod lexer;
pub mod model;
pub mod purposes;
pub mod testcase;
pub mod weave_config;

use thiserror::Error;

pub use lexer::SourceSpan;
pub use model::{parse_model, parse_model_named, parse_model_unchecked, write_expr, write_model};
pub use purposes::{parse_purposes, write_purposes};
pub use testcase::{emit_testcase, parse_testcase};
pub use weave_config::{parse_weave_config, write_weave_config};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{span}: syntax error: {message}")]
    Syntax { span: SourceSpan, message: String },
    #[error("{span}: resolution error: {message}")]
    Resolution { span: SourceSpan, message: String },
}

impl ParseError {
    pub fn syntax(span: SourceSpan, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            span,
            message: message.into(),
        }
    }

    pub fn resolution(span: SourceSpan, message: impl Into<String>) -> Self {
        ParseError::Resolution {
            span,
            message: message.into(),
        }
    }

    pub fn span(&self) -> &SourceSpan {
        match self {
            ParseError::Syntax { span, .. } | ParseError::Resolution { span, .. } => span,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            ParseError::Syntax { message, .. } | ParseError::Resolution { message, .. } => message,
        }
    }
}

/// Serializes an efsm [`crate::efsm::Expr`] the same way the model writer does.
pub fn expr_to_string(e: &crate::efsm::Expr) -> String {
    write_expr(e)
}

/// Canonical model text; [`parse_model`] reads it back to an equal model.
pub fn serialize_model(m: &crate::efsm::Efsm) -> String {
    write_model(m)
}
