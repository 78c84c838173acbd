//! Textual module format (`.mir` files).
//!
//! The format is line-oriented: one instruction per line, labels ending in
//! `:`, `;` comments, and trailing `#N` annotations carrying the stable
//! instruction ids. Type declarations may span lines inside their braces.
//!
//! ```text
//! type Msg = record {
//!   iType: int4,
//! }
//!
//! global msg: Msg
//!
//! library fn produce() {
//! entry:
//!   input t #1
//!   addr p, msg.iType #2
//!   store p, t #3
//!   ret #4
//! }
//! ```
//!
//! [`parse_module`] recovers at line boundaries, so one run can report
//! several errors. [`print_module`] emits the canonical form: declaration
//! order preserved, two-space indents, and every instruction carrying its
//! id. Printing then reparsing reproduces the module exactly, and printing
//! is a fixpoint: `print(parse(print(parse(text))))` is byte-identical to
//! `print(parse(text))`.

mod lex;
mod parse;
mod print;

pub use parse::parse_module;
pub use print::print_module;

use std::fmt;

/// A half-open source region, 1-based line and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub line: u32,
    pub column: u32,
    pub length: u32,
}

/// A syntax error with the region it points at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub span: SourceSpan,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: expected {}, found {}",
            self.span.line, self.span.column, self.expected, self.found
        )
    }
}
