use serde::{Deserialize, Serialize};

use crate::pysyntax::{apply_edits, parse, tokenize, Edit, Span, SyntaxNode};

use super::text::{dedent_edits, indentation, line_start, multiline_strings, rest_of_line_is_empty, starts_line};
use super::TransformError;

/// One documented function: `target` is its source, `input` the same source
/// without docstrings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionPair {
    pub name: String,
    pub span: Span,
    pub input: String,
    pub target: String,
}

/// Edits deleting the docstring of `func`, or replacing it with `pass`
/// when it is the whole body.
pub(crate) fn docstring_removal(src: &str, func: &SyntaxNode) -> Option<Edit> {
    let doc = func.docstring()?;
    let stmts = &func.body()?.children;
    let next = stmts.get(1);
    if starts_line(src, doc.span.start) {
        if let Some(end) = rest_of_line_is_empty(src, doc.span.end) {
            let span = Span::new(line_start(src, doc.span.start), end);
            return Some(match next {
                Some(_) => Edit::delete(span),
                None => {
                    let newline = if src[..end].ends_with('\n') { "\n" } else { "" };
                    Edit::new(span, format!("{}pass{newline}", indentation(src, doc.span.start)))
                }
            });
        }
    }
    Some(match next {
        Some(n) => Edit::delete(Span::new(doc.span.start, n.span.start)),
        None => Edit::new(doc.span, "pass"),
    })
}

/// Removes the docstrings of every function in `src`.
pub(crate) fn remove_function_docstrings(src: &str) -> Result<String, TransformError> {
    let tree = parse(src)?;
    let edits: Vec<Edit> =
        tree.descendants().filter(|n| n.kind.is_function_def()).filter_map(|f| docstring_removal(src, f)).collect();
    Ok(apply_edits(src, &edits)?)
}

/// The full source of `node` from the start of its line, shifted left so
/// that it begins in column 0.
pub(crate) fn extract_dedented(src: &str, strings: &[Span], node: &SyntaxNode) -> Result<String, TransformError> {
    let start = line_start(src, node.outer_start());
    let width = node.outer_start() - start;
    let end = node.span.end;
    let edits: Vec<Edit> = dedent_edits(src, start, end, width, strings, &[])
        .into_iter()
        .map(|e| Edit::delete(Span::new(e.span.start - start, e.span.end - start)))
        .collect();
    let mut out = apply_edits(&src[start..end], &edits)?;
    out.push('\n');
    Ok(out)
}

/// One pair per function whose body opens with a string literal. Nested
/// documented functions yield their own pairs and lose their docstrings in
/// every enclosing pair's input.
pub fn strip_docstrings(source: &str) -> Result<Vec<FunctionPair>, TransformError> {
    let tree = parse(source)?;
    let strings = multiline_strings(&tokenize(source)?);
    let mut pairs = Vec::new();
    for func in tree.descendants().filter(|n| n.kind.is_function_def() && n.docstring().is_some()) {
        let target = extract_dedented(source, &strings, func)?;
        let input = remove_function_docstrings(&target)?;
        parse(&input).map_err(|e| TransformError::Output(format!("docstring removal: {e}")))?;
        pairs.push(FunctionPair {
            name: func.name.clone().unwrap_or_default(),
            span: Span::new(func.outer_start(), func.span.end),
            input,
            target,
        });
    }
    Ok(pairs)
}
