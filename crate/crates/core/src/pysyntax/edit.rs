use thiserror::Error;

use super::Span;

/// Replace the bytes in `span` with `text`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edit {
    pub span: Span,
    pub text: String,
}

impl Edit {
    pub fn new(span: Span, text: impl Into<String>) -> Self {
        Self { span, text: text.into() }
    }

    pub fn delete(span: Span) -> Self {
        Self::new(span, "")
    }

    pub fn insert(at: usize, text: impl Into<String>) -> Self {
        Self::new(Span::new(at, at), text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("edits {first:?} and {second:?} overlap")]
    Overlap { first: Span, second: Span },
    #[error("edit {span:?} out of bounds for source of length {len}")]
    OutOfBounds { span: Span, len: usize },
    #[error("edit {span:?} splits a UTF-8 character")]
    NotCharBoundary { span: Span },
}

/// Applies non-overlapping edits, all expressed against the original source.
///
/// Two insertions at the same offset keep their input order. An insertion at
/// the boundary of a replacement does not count as overlap.
pub fn apply_edits(source: &str, edits: &[Edit]) -> Result<String, EditError> {
    let mut order: Vec<usize> = (0..edits.len()).collect();
    order.sort_by_key(|&i| (edits[i].span.start, edits[i].span.end, i));
    for &i in &order {
        let span = edits[i].span;
        if span.end > source.len() || span.start > span.end {
            return Err(EditError::OutOfBounds { span, len: source.len() });
        }
        if !source.is_char_boundary(span.start) || !source.is_char_boundary(span.end) {
            return Err(EditError::NotCharBoundary { span });
        }
    }
    for pair in order.windows(2) {
        let (a, b) = (edits[pair[0]].span, edits[pair[1]].span);
        if b.start < a.end {
            return Err(EditError::Overlap { first: a, second: b });
        }
    }
    let extra: usize = edits.iter().map(|e| e.text.len()).sum();
    let mut out = String::with_capacity(source.len() + extra);
    let mut cursor = 0;
    for &i in &order {
        let edit = &edits[i];
        out.push_str(&source[cursor..edit.span.start]);
        out.push_str(&edit.text);
        cursor = edit.span.end;
    }
    out.push_str(&source[cursor..]);
    Ok(out)
}
