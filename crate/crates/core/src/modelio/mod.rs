//! Text formats: the `.mvn` model language, `.map` abstraction mappings,
//! DOT export of state graphs and JSON reports.

mod dot;
mod dsl;
mod lexer;
mod mapping;
mod report;

use std::fmt;

use thiserror::Error;

use crate::abstraction::MappingError;

pub use dot::export_dot;
pub use dsl::{parse_model, serialize_model, serialize_model_with_header};
pub use mapping::{parse_mapping, serialize_mapping};
pub use report::{export_report, to_json_value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    Duplicate,
    UnknownEntity,
    Missing,
    NonTotal,
    LevelRange,
    Mapping(MappingError),
}

/// A parse failure with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, column: usize, kind: ParseErrorKind, message: impl Into<String>) -> Self {
        ParseError {
            line,
            column,
            kind,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}
