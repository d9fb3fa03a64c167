//! First-order syntax, the problem-file reader and printer, and the
//! chronologically ordered corpus.
//!
//! Problem files are sequences of `fof(name, role, formula).` statements with
//! `%` comments and `include('file').` directives. Free variables are closed
//! universally with a warning.

mod clause;
mod corpus;
mod lexer;
mod parser;
mod print;
mod syntax;

pub use clause::{
    normalize_literals, write_literals, Clause, ClauseId, ClauseRole, ClauseSet, EQUALITY_ORIGIN,
};
pub use corpus::{Corpus, CorpusError, CorpusItem, Split, MANIFEST_FILE};
pub use lexer::Tok;
pub use parser::{parse_formula, parse_problem, Cursor, ProblemReader};
pub use print::{is_lower_word, is_upper_word, print_formula, write_name};
pub use syntax::*;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("unknown role `{role}` at {line}:{col}")]
    UnknownRole {
        line: usize,
        col: usize,
        role: String,
    },
    #[error("duplicate formula name `{0}`")]
    DuplicateName(String),
    #[error("{kind} `{symbol}` used with arity {first} and {second}")]
    ArityClash {
        symbol: String,
        kind: SymbolKind,
        first: usize,
        second: usize,
    },
    #[error("more than one conjecture: `{first}` and `{second}`")]
    MultipleConjectures { first: String, second: String },
    #[error("included file `{0}` not found")]
    IncludeNotFound(String),
    #[error("include cycle through `{0}`")]
    IncludeCycle(String),
    #[error("cannot read `{path}`: {message}")]
    Io { path: String, message: String },
}

impl ParseError {
    pub fn syntax(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            line,
            col,
            message: message.into(),
        }
    }
}

impl From<ArityClash> for ParseError {
    fn from(c: ArityClash) -> Self {
        ParseError::ArityClash {
            symbol: c.symbol,
            kind: c.kind,
            first: c.first,
            second: c.second,
        }
    }
}

#[cfg(test)]
mod tests;
