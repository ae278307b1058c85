//! QEXT and QDIMACS text formats, and a seeded instance generator.
//!
//! QEXT is line oriented:
//!
//! ```text
//! c optional comments
//! p qext <nvars> <nclauses> <sat|nae> [const]
//! a 1 2 0
//! e 3 4 0
//! 1 -3 T 0
//! ```
//!
//! Clause lines hold up to three nonzero integers or the constants `T`/`F`,
//! terminated by `0`. `const` marks a formula that allows constants even when
//! none appear.

mod generate;
mod qdimacs;
mod qext;

use thiserror::Error;

use crate::formula::FormulaError;

pub use generate::{generate_instance, GeneratorConfig};
pub use qdimacs::{export_qdimacs, parse_qdimacs};
pub use qext::{parse_qext, serialize_qext, QextDocument};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IoError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("QDIMACS export needs SAT semantics without constants")]
    NotExportable,
    #[error("cannot generate class {class} ({attempts} attempts): {hint}")]
    Generation {
        class: String,
        attempts: usize,
        hint: String,
    },
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// Whitespace-separated token with its 1-based column.
pub(crate) struct Token<'a> {
    pub text: &'a str,
    pub column: usize,
}

pub(crate) fn tokens(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices().chain(std::iter::once((line.len(), ' '))) {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push(Token {
                    text: &line[s..i],
                    column: line[..s].chars().count() + 1,
                });
                start = None;
            }
            _ => {}
        }
    }
    out
}

pub(crate) fn err(line: usize, column: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        column,
        message: message.into(),
    }
}
