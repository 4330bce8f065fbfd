//! Frontend error types. Syntax errors and unsupported-construct rejections
//! are distinct so the driver can report "skipped: unsupported" rather than
//! "invalid".

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {line}:{column}: found {found}, expected {}", expected.join(" | "))]
    Syntax { line: usize, column: usize, expected: Vec<String>, found: String },

    #[error("unsupported construct at {line}:{column}: {construct}")]
    Unsupported { construct: String, line: usize, column: usize },
}

impl ParseError {
    pub fn syntax(line: usize, column: usize, expected: Vec<String>, found: String) -> Self {
        ParseError::Syntax { line, column, expected, found }
    }

    pub fn unsupported(construct: impl Into<String>, line: usize, column: usize) -> Self {
        ParseError::Unsupported { construct: construct.into(), line, column }
    }

    pub fn is_unsupported(&self) -> bool {
        matches!(self, ParseError::Unsupported { .. })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PrintError {
    /// A node kind reached the printer without an emission rule, which means
    /// a transformation left the tree in a state the subset cannot express.
    #[error("no emission rule for {node}")]
    MissingRule { node: String },
}
