//! Concrete syntax for language definitions (`.lnsl`) and process scripts
//! (`.lns`), and the line-delimited run report.

mod cursor;
pub mod files;
pub mod language;
pub mod process;
pub mod report;

use std::fmt;

use thiserror::Error;

use crate::lang::LangError;

pub use files::{load_languages, load_process, LoadError, SourceFile, SourceKind};
pub use language::{parse_language, print_language};
pub use process::{parse_process, print_lang_expr, Imports};
pub use report::{emit_report, parse_report, ReportEvent, ReportTrace, RunReport};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SyntaxErrorKind {
    Parse(String),
    UndeclaredMetavarRoot(String),
    UnboundVariable(String),
    SortMismatch(String),
    Language(LangError),
}

impl fmt::Display for SyntaxErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyntaxErrorKind::Parse(m) => f.write_str(m),
            SyntaxErrorKind::UndeclaredMetavarRoot(w) => write!(
                f,
                "`{w}` is neither a parenthesized term nor a metavariable of a declared root"
            ),
            SyntaxErrorKind::UnboundVariable(v) => write!(f, "unbound variable `{v}`"),
            SyntaxErrorKind::SortMismatch(m) => write!(f, "sort mismatch: {m}"),
            SyntaxErrorKind::Language(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {kind}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub kind: SyntaxErrorKind,
}

impl SyntaxError {
    pub fn new(line: usize, col: usize, kind: SyntaxErrorKind) -> SyntaxError {
        SyntaxError { line, col, kind }
    }
}
