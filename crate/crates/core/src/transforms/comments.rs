use crate::pysyntax::{apply_edits, parse, tokenize, Edit, Span, TokenKind};

use super::text::{line_end, line_start, starts_line};
use super::TransformError;

/// Removes every comment. A comment alone on its line takes the line with
/// it; a trailing comment takes the whitespace before it.
pub fn strip_comments(source: &str) -> Result<String, TransformError> {
    parse(source)?;
    let tokens = tokenize(source)?;
    let mut edits = Vec::new();
    for t in tokens.iter().filter(|t| t.kind == TokenKind::Comment) {
        let span = if starts_line(source, t.span.start) {
            Span::new(line_start(source, t.span.start), line_end(source, t.span.end))
        } else {
            let kept = source[..t.span.start].trim_end_matches([' ', '\t', '\x0c']).len();
            Span::new(kept, t.span.end)
        };
        edits.push(Edit::delete(span));
    }
    Ok(apply_edits(source, &edits)?)
}

pub fn has_comments(source: &str) -> bool {
    tokenize(source).is_ok_and(|toks| toks.iter().any(|t| t.kind == TokenKind::Comment))
}
