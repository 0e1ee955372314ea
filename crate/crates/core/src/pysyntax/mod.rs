//! Python source handling: tokens, syntax trees and span edits.
//!
//! Everything works on byte offsets into the original UTF-8 source so that
//! callers can slice and rewrite text without re-serializing a tree.

mod edit;
mod lexer;
mod parser;
mod tree;

use serde::{Deserialize, Serialize};

pub use edit::{apply_edits, Edit, EditError};
pub use lexer::{is_keyword, tokenize, LexError, Token, TokenKind, KEYWORDS};
pub use parser::{parse, ParseError};
pub use tree::{Descendants, ExprContext, NodeKind, SyntaxNode};

/// Half-open byte range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end, "inverted span {start}..{end}");
        Self { start, end }
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn contains(&self, other: Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

/// True when `source` parses as Python 3.
pub fn is_parsable(source: &str) -> bool {
    parse(source).is_ok()
}
