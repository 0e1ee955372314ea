use crate::pysyntax::{apply_edits, parse, tokenize, Edit, NodeKind, Span, SyntaxNode};

use super::text::{dedent_edits, line_start, multiline_strings, rest_of_line_is_empty, starts_line};
use super::TransformError;

const RECEIVERS: [&str; 2] = ["self", "cls"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Declassified {
    pub text: String,
    pub classes: usize,
}

fn is_filler(stmt: &SyntaxNode) -> bool {
    match stmt.kind {
        NodeKind::Pass => true,
        NodeKind::ExprStmt => stmt.children.first().is_some_and(|e| e.kind == NodeKind::Ellipsis),
        _ => false,
    }
}

/// Deletion of a method's leading `self`/`cls` parameter, together with a
/// positional-only marker that would otherwise be left first.
fn receiver_removal(src: &str, method: &SyntaxNode) -> Option<Edit> {
    let params = method.child(NodeKind::Parameters)?;
    let first = params.children.first()?;
    if first.kind != NodeKind::Param || !RECEIVERS.contains(&first.name.as_deref()?) {
        return None;
    }
    let mut rest = params.children[1..].iter();
    let mut next = rest.next();
    if next.is_some_and(|n| n.kind == NodeKind::SlashMarker) {
        next = rest.next();
    }
    let end = match next {
        Some(n) => n.span.start,
        None => params.span.end - 1,
    };
    debug_assert!(src[first.span.start..end].chars().all(|c| c != ')'));
    Some(Edit::delete(Span::new(first.span.start, end)))
}

/// `self.x` → `x` for every attribute access on `self` or `cls` in `body`.
fn receiver_prefixes(body: &SyntaxNode) -> Vec<Edit> {
    body.descendants()
        .filter(|n| n.kind == NodeKind::Attribute)
        .filter_map(|attr| {
            let base = attr.children.first()?;
            let is_receiver = base.kind == NodeKind::Name && RECEIVERS.contains(&base.name.as_deref()?);
            let name = attr.name_span?;
            is_receiver.then(|| Edit::delete(Span::new(base.span.start, name.start)))
        })
        .collect()
}

fn remove_class(src: &str, class: &SyntaxNode) -> Result<String, TransformError> {
    let name = class.name.as_deref().unwrap_or("?");
    let body = class.body().expect("class has a body");
    let stmts = &body.children;
    let has_doc = class.docstring().is_some();
    let kept = &stmts[usize::from(has_doc)..];
    let has_methods = kept.iter().any(|s| s.kind.is_function_def());
    if !has_methods && kept.iter().all(is_filler) {
        return Err(TransformError::Unsupported(format!("class {name} has no body once its header is removed")));
    }
    let strings = multiline_strings(&tokenize(src)?);
    let outer = class.outer_start();
    let mut edits = Vec::new();

    if !starts_line(src, stmts[0].span.start) {
        // `class A: x = 1` keeps its statements where they are.
        edits.push(Edit::delete(Span::new(outer, kept[0].span.start)));
    } else {
        let class_line = line_start(src, outer);
        let body_line = line_start(src, stmts[0].span.start);
        edits.push(Edit::delete(Span::new(class_line, body_line)));
        if has_doc {
            let doc = &stmts[0];
            let span = match rest_of_line_is_empty(src, doc.span.end) {
                Some(end) if starts_line(src, kept[0].span.start) => Span::new(body_line, end),
                _ => Span::new(doc.span.start, kept[0].span.start),
            };
            edits.push(Edit::delete(span));
        }
        for method in kept.iter().filter(|s| s.kind.is_function_def()) {
            edits.extend(receiver_removal(src, method));
        }
        edits.extend(receiver_prefixes(body));
        let width = (stmts[0].span.start - body_line).saturating_sub(outer - class_line);
        let avoid: Vec<Span> = edits.iter().map(|e| e.span).collect();
        edits.extend(dedent_edits(src, body_line, body.span.end, width, &strings, &avoid));
        return Ok(apply_edits(src, &edits)?);
    }
    edits.extend(receiver_prefixes(body));
    Ok(apply_edits(src, &edits)?)
}

/// Unwraps every class: header, decorators, bases and class docstring go,
/// methods move out one level and lose their `self`/`cls` receiver.
/// Returns `None` when the source has no class.
pub fn declassify(source: &str) -> Result<Option<Declassified>, TransformError> {
    let mut text = source.to_string();
    let mut classes = 0;
    loop {
        let tree = parse(&text).map_err(|e| {
            if classes == 0 {
                TransformError::Parse(e)
            } else {
                TransformError::Output(format!("declassify: {e}"))
            }
        })?;
        let Some(class) = tree.descendants().find(|n| n.kind == NodeKind::ClassDef) else {
            break;
        };
        text = remove_class(&text, class)?;
        classes += 1;
    }
    Ok((classes > 0).then_some(Declassified { text, classes }))
}
