use std::collections::HashSet;

use crate::pysyntax::{apply_edits, parse, tokenize, Edit, NodeKind, Span, SyntaxNode, TokenKind};

use super::text::{line_start, logical_line_start};
use super::TransformError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lowered {
    pub text: String,
    pub lowered: usize,
    /// Comprehensions left in place because no helper could stand in for
    /// them (inside lambdas, other comprehensions, decorators, class bodies,
    /// one-line function bodies, or using `await`, `yield` or `:=`).
    pub skipped: usize,
}

fn is_statement(kind: NodeKind) -> bool {
    use NodeKind::*;
    matches!(
        kind,
        FunctionDef
            | AsyncFunctionDef
            | ClassDef
            | Return
            | Delete
            | Assign
            | AugAssign
            | AnnAssign
            | For
            | AsyncFor
            | While
            | If
            | With
            | AsyncWith
            | Match
            | Raise
            | Try
            | Assert
            | ExprStmt
            | StringStmt
    )
}

/// Where a helper for a comprehension goes: the logical line that opens the
/// innermost statement holding it, and that line's indentation.
struct Site {
    insert_at: usize,
    indent: String,
}

fn locate(src: &str, tokens: &[crate::pysyntax::Token<'_>], path: &[&SyntaxNode], comp: &SyntaxNode) -> Option<Site> {
    use NodeKind::*;
    let blocked =
        path.iter().any(|n| matches!(n.kind, Lambda | SetComp | DictComp | GeneratorExp | ListComp | Decorator));
    let unsafe_inside = comp.descendants().any(|n| {
        matches!(n.kind, NamedExpr | Yield | YieldFrom | Await)
            || (n.kind == CompFor && n.op.as_deref() == Some("async"))
    });
    if blocked || unsafe_inside || iter_reads_own_target(comp) {
        return None;
    }
    let stmt = path.iter().rev().find(|n| is_statement(n.kind))?;
    let first = logical_line_start(tokens, stmt.outer_start())?;
    let insert_at = line_start(src, first);
    // A helper placed outside the enclosing function could not see its locals.
    let scope = path.iter().rev().find(|n| {
        matches!(n.kind, FunctionDef | AsyncFunctionDef | ClassDef)
            && n.body().is_some_and(|b| b.span.contains(comp.span))
    });
    // In a class body the helper could not see class-level names.
    if scope.is_some_and(|s| s.kind == ClassDef || insert_at <= s.span.start) {
        return None;
    }
    Some(Site { insert_at, indent: src[insert_at..first].to_string() })
}

fn target_names(comp: &SyntaxNode) -> HashSet<String> {
    comp.children[1..]
        .iter()
        .filter(|c| c.kind == NodeKind::CompFor)
        .flat_map(|c| c.children[0].descendants())
        .filter(|d| d.kind == NodeKind::Name)
        .filter_map(|d| d.name.clone())
        .collect()
}

/// Names `node` reads from the scope it is evaluated in.
fn free_names(node: &SyntaxNode, out: &mut HashSet<String>) {
    use NodeKind::*;
    match node.kind {
        Name => out.extend(node.name.clone()),
        Lambda => {
            let params = &node.children[0].children;
            params.iter().flat_map(|p| &p.children).for_each(|c| free_names(c, out));
            let mut inner = HashSet::new();
            free_names(&node.children[1], &mut inner);
            let own: HashSet<&str> = params.iter().filter_map(|p| p.name.as_deref()).collect();
            out.extend(inner.into_iter().filter(|n| !own.contains(n.as_str())));
        }
        ListComp | SetComp | DictComp | GeneratorExp => {
            let first = node.children.iter().position(|c| c.kind == CompFor).expect("a comprehension has a for clause");
            free_names(&node.children[first].children[1], out);
            let mut inner = HashSet::new();
            for (i, c) in node.children.iter().enumerate() {
                if i == first {
                    c.children.iter().skip(2).for_each(|g| free_names(g, &mut inner));
                } else {
                    free_names(c, &mut inner);
                }
            }
            let own = target_names(node);
            out.extend(inner.into_iter().filter(|n| !own.contains(n)));
        }
        _ => node.children.iter().for_each(|c| free_names(c, out)),
    }
}

/// The outermost iterable runs in the enclosing scope, but inside a helper
/// a name the loop targets bind would be local and read before assignment.
fn iter_reads_own_target(comp: &SyntaxNode) -> bool {
    let mut read = HashSet::new();
    free_names(&comp.children[1].children[1], &mut read);
    let bound = target_names(comp);
    read.iter().any(|n| bound.contains(n))
}

fn first_lowerable<'t>(
    src: &str,
    tokens: &[crate::pysyntax::Token<'_>],
    node: &'t SyntaxNode,
    path: &mut Vec<&'t SyntaxNode>,
    seen: &mut usize,
) -> Option<(&'t SyntaxNode, Site)> {
    if node.kind == NodeKind::ListComp {
        *seen += 1;
        if let Some(site) = locate(src, tokens, path, node) {
            return Some((node, site));
        }
    }
    path.push(node);
    for child in &node.children {
        if let Some(found) = first_lowerable(src, tokens, child, path, seen) {
            return Some(found);
        }
    }
    path.pop();
    None
}

fn inline(text: &str) -> String {
    if text.contains('\n') {
        format!("({text})")
    } else {
        text.to_string()
    }
}

fn helper(src: &str, comp: &SyntaxNode, name: &str, result: &str, indent: &str) -> String {
    let unit = if indent.contains('\t') { "\t" } else { "    " };
    let mut out = format!("{indent}def {name}():\n{indent}{unit}{result} = []\n");
    let mut depth = 1;
    for clause in &comp.children[1..] {
        let pad = format!("{indent}{}", unit.repeat(depth));
        match clause.kind {
            NodeKind::CompFor => {
                let target = inline(clause.children[0].text(src));
                let iter = inline(clause.children[1].text(src));
                out.push_str(&format!("{pad}for {target} in {iter}:\n"));
            }
            _ => out.push_str(&format!("{pad}if {}:\n", inline(clause.children[0].text(src)))),
        }
        depth += 1;
    }
    let element = comp.children[0].text(src);
    out.push_str(&format!("{indent}{}{result}.append({element})\n", unit.repeat(depth)));
    out.push_str(&format!("{indent}{unit}return {result}\n"));
    out
}

/// Replaces each list comprehension with a call to a zero-argument helper
/// defined just before the statement that uses it. Outer comprehensions go
/// first so that inner ones end up inside the helper, next to the loop
/// variables they read. Returns `None` when there is no comprehension.
pub fn lower_listcomps(source: &str) -> Result<Option<Lowered>, TransformError> {
    let taken: HashSet<String> =
        tokenize(source)?.iter().filter(|t| t.kind == TokenKind::Name).map(|t| t.text.to_string()).collect();
    let mut next_id = 0;
    let mut text = source.to_string();
    let mut lowered = 0;
    loop {
        let tree = parse(&text).map_err(|e| {
            if lowered == 0 {
                TransformError::Parse(e)
            } else {
                TransformError::Output(format!("listcomp lowering: {e}"))
            }
        })?;
        let tokens = tokenize(&text)?;
        let mut seen = 0;
        let Some((comp, site)) = first_lowerable(&text, &tokens, &tree, &mut Vec::new(), &mut seen) else {
            if lowered == 0 && seen == 0 {
                return Ok(None);
            }
            return Ok(Some(Lowered { text, lowered, skipped: seen }));
        };
        while taken.contains(&format!("_lc_{next_id}")) {
            next_id += 1;
        }
        let name = format!("_lc_{next_id}");
        next_id += 1;
        let used: HashSet<&str> = comp.descendants().filter_map(|n| n.name.as_deref()).collect();
        let mut result = String::from("result");
        while used.contains(result.as_str()) {
            result.push('_');
        }
        let edits = [
            Edit::insert(site.insert_at, helper(&text, comp, &name, &result, &site.indent)),
            Edit::new(Span::new(comp.span.start, comp.span.end), format!("{name}()")),
        ];
        text = apply_edits(&text, &edits)?;
        lowered += 1;
    }
}
