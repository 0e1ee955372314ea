//! Line-level helpers shared by the rewriters.

use crate::pysyntax::{Edit, Span, Token, TokenKind};

const INDENT_CHARS: [char; 3] = [' ', '\t', '\x0c'];

pub(crate) fn line_start(src: &str, pos: usize) -> usize {
    src[..pos].rfind('\n').map_or(0, |i| i + 1)
}

/// Offset just past the line break that ends the line containing `pos`.
pub(crate) fn line_end(src: &str, pos: usize) -> usize {
    src[pos..].find('\n').map_or(src.len(), |i| pos + i + 1)
}

/// True when only indentation precedes `pos` on its line.
pub(crate) fn starts_line(src: &str, pos: usize) -> bool {
    src[line_start(src, pos)..pos].chars().all(|c| INDENT_CHARS.contains(&c))
}

pub(crate) fn indentation(src: &str, pos: usize) -> &str {
    let start = line_start(src, pos);
    let rest = &src[start..];
    &rest[..rest.len() - rest.trim_start_matches(INDENT_CHARS).len()]
}

/// When the statement ending at `end` is the last one on its line (an
/// optional `;` aside), the offset past that line's break.
pub(crate) fn rest_of_line_is_empty(src: &str, end: usize) -> Option<usize> {
    let rest = src[end..].trim_start_matches(INDENT_CHARS);
    let rest = rest.strip_prefix(';').unwrap_or(rest).trim_start_matches(INDENT_CHARS);
    if rest.is_empty() || rest.starts_with('\n') || rest.starts_with("\r\n") {
        Some(line_end(src, end))
    } else {
        None
    }
}

/// Spans of string tokens that cross a line break.
pub(crate) fn multiline_strings(tokens: &[Token<'_>]) -> Vec<Span> {
    tokens.iter().filter(|t| t.kind == TokenKind::String && t.text.contains('\n')).map(|t| t.span).collect()
}

fn inside(spans: &[Span], pos: usize) -> bool {
    let i = spans.partition_point(|s| s.end <= pos);
    spans.get(i).is_some_and(|s| s.start < pos)
}

/// Line starts in `[from, to)`, `from` included when it is itself a line start.
fn line_starts(src: &str, from: usize, to: usize) -> impl Iterator<Item = usize> + '_ {
    let first = (from == line_start(src, from)).then_some(from);
    first.into_iter().chain(src[from..to].match_indices('\n').map(move |(i, _)| from + i + 1).filter(move |&p| p < to))
}

/// Deletions removing up to `width` bytes of leading whitespace from each
/// line in `[from, to)`. Lines inside multi-line strings and lines whose
/// indentation overlaps one of `avoid` are left alone.
pub(crate) fn dedent_edits(
    src: &str,
    from: usize,
    to: usize,
    width: usize,
    strings: &[Span],
    avoid: &[Span],
) -> Vec<Edit> {
    let mut edits = Vec::new();
    if width == 0 {
        return edits;
    }
    for p in line_starts(src, from, to) {
        if inside(strings, p) {
            continue;
        }
        let k = src[p..].bytes().take(width).take_while(|b| matches!(b, b' ' | b'\t' | b'\x0c')).count();
        if k == 0 {
            continue;
        }
        let span = Span::new(p, p + k);
        if avoid.iter().any(|a| a.start < span.end && span.start < a.end) {
            continue;
        }
        edits.push(Edit::delete(span));
    }
    edits
}

/// Start of the logical line containing `pos`: the first token after the
/// preceding NEWLINE, skipping comments and indentation tokens.
pub(crate) fn logical_line_start(tokens: &[Token<'_>], pos: usize) -> Option<usize> {
    let mut at_line_start = true;
    let mut found = None;
    for t in tokens {
        if t.span.start > pos {
            break;
        }
        match t.kind {
            TokenKind::Newline => at_line_start = true,
            TokenKind::Comment | TokenKind::Indent | TokenKind::Dedent => {}
            _ => {
                if at_line_start {
                    found = Some(t.span.start);
                }
                at_line_start = false;
            }
        }
    }
    found
}
