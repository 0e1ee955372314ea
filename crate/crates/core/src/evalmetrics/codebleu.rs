use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::pysyntax::{is_keyword, ExprContext, NodeKind, SyntaxNode};

use super::bleu::{bleu, weighted_bleu};

/// Subtrees are cut below this many levels (the root counts as one).
pub const SUBTREE_DEPTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeBleu {
    pub score: f64,
    pub ngram: f64,
    pub weighted_ngram: f64,
    pub syntax_match: f64,
    pub dataflow_match: f64,
}

impl CodeBleu {
    pub fn from_components(ngram: f64, weighted_ngram: f64, syntax_match: f64, dataflow_match: f64) -> Self {
        let score = (ngram + weighted_ngram + syntax_match + dataflow_match) / 4.0;
        Self { score, ngram, weighted_ngram, syntax_match, dataflow_match }
    }
}

fn label(node: &SyntaxNode) -> String {
    match &node.op {
        Some(op) => format!("{}[{op}]", node.kind.as_str()),
        None => node.kind.as_str().to_string(),
    }
}

fn write_subtree(node: &SyntaxNode, depth: usize, out: &mut String) {
    out.push_str(&label(node));
    if depth > 1 && !node.children.is_empty() {
        out.push('(');
        for (i, c) in node.children.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            write_subtree(c, depth - 1, out);
        }
        out.push(')');
    }
}

/// Every node's subtree cut at `SUBTREE_DEPTH`, as kind labels only, so
/// identifier and literal texts play no part.
pub fn subtrees(tree: &SyntaxNode) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for node in tree.descendants() {
        let mut s = String::new();
        write_subtree(node, SUBTREE_DEPTH, &mut s);
        *counts.entry(s).or_insert(0) += 1;
    }
    counts
}

fn multiset_overlap<K: Eq + std::hash::Hash>(candidate: &HashMap<K, usize>, reference: &HashMap<K, usize>) -> usize {
    reference.iter().map(|(k, &n)| n.min(candidate.get(k).copied().unwrap_or(0))).sum()
}

pub fn syntax_match(candidate: &SyntaxNode, reference: &SyntaxNode) -> f64 {
    let reference = subtrees(reference);
    let total: usize = reference.values().sum();
    multiset_overlap(&subtrees(candidate), &reference) as f64 / total as f64
}

/// A def-use edge: scope number, variable number (order of first binding in
/// the scope), position of the reaching binding, position of the use.
/// Positions count name events within the scope.
pub type FlowEdge = (usize, usize, usize, usize);

struct Scope {
    id: usize,
    vars: HashMap<String, usize>,
    last_def: HashMap<String, usize>,
    events: usize,
}

struct FlowBuilder {
    scopes: Vec<Scope>,
    opened: usize,
    edges: Vec<FlowEdge>,
}

impl FlowBuilder {
    fn scope(&mut self) -> &mut Scope {
        self.scopes.last_mut().expect("module scope")
    }

    fn open(&mut self) {
        self.scopes.push(Scope { id: self.opened, vars: HashMap::new(), last_def: HashMap::new(), events: 0 });
        self.opened += 1;
    }

    fn bind(&mut self, name: &str) {
        let scope = self.scope();
        let next = scope.vars.len();
        scope.vars.entry(name.to_string()).or_insert(next);
        scope.last_def.insert(name.to_string(), scope.events);
        scope.events += 1;
    }

    fn use_name(&mut self, name: &str) {
        let scope = self.scope();
        let edge = scope.last_def.get(name).map(|&def| (scope.id, scope.vars[name], def, scope.events));
        scope.events += 1;
        self.edges.extend(edge);
    }

    fn visit_all<'a>(&mut self, nodes: impl IntoIterator<Item = &'a SyntaxNode>) {
        for n in nodes {
            self.visit(n);
        }
    }

    /// Parameter names go to the new scope; defaults and annotations are
    /// evaluated in the enclosing one.
    fn function(&mut self, node: &SyntaxNode, body: &[&SyntaxNode]) {
        let params = node.child(NodeKind::Parameters);
        self.visit_all(node.decorators());
        for p in params.iter().flat_map(|p| &p.children) {
            self.visit_all(&p.children);
        }
        self.visit_all(node.child(NodeKind::Returns));
        if let Some(name) = &node.name {
            self.bind(name);
        }
        self.open();
        for p in params.iter().flat_map(|p| &p.children) {
            if let Some(name) = &p.name {
                self.bind(name);
            }
        }
        self.visit_all(body.iter().copied());
        self.scopes.pop();
    }

    fn visit(&mut self, node: &SyntaxNode) {
        use NodeKind::*;
        match node.kind {
            Name => match (node.ctx, &node.name) {
                (ExprContext::Store, Some(name)) => self.bind(name),
                (ExprContext::Load, Some(name)) => self.use_name(name),
                _ => {}
            },
            FunctionDef | AsyncFunctionDef => self.function(node, &node.body().into_iter().collect::<Vec<_>>()),
            Lambda => self.function(node, &node.children[1..].iter().collect::<Vec<_>>()),
            ClassDef => {
                self.visit_all(node.children.iter().filter(|c| c.kind != Block));
                if let Some(name) = &node.name {
                    self.bind(name);
                }
                self.open();
                self.visit_all(node.body());
                self.scopes.pop();
            }
            Assign | NamedExpr => {
                let (value, targets) = node.children.split_last().expect("assignment has a value");
                self.visit(value);
                self.visit_all(targets);
            }
            AugAssign => {
                let target = &node.children[0];
                if let (NodeKind::Name, Some(name)) = (target.kind, &target.name) {
                    self.use_name(name);
                }
                self.visit(&node.children[1]);
                self.visit(target);
            }
            AnnAssign => {
                self.visit_all(node.children[1..].iter().rev());
                self.visit(&node.children[0]);
            }
            For | AsyncFor | CompFor => {
                self.visit(&node.children[1]);
                self.visit(&node.children[0]);
                self.visit_all(&node.children[2..]);
            }
            ListComp | SetComp | DictComp | GeneratorExp => {
                let (clauses, element): (Vec<&SyntaxNode>, Vec<&SyntaxNode>) =
                    node.children.iter().partition(|c| matches!(c.kind, CompFor | CompIf));
                self.visit_all(clauses);
                self.visit_all(element);
            }
            Alias => match node.children.first() {
                Some(bound) => self.visit(bound),
                None => {
                    let name = node.name.as_deref().unwrap_or("*");
                    if name != "*" {
                        self.bind(name.split('.').next().unwrap_or(name));
                    }
                }
            },
            ExceptHandler => {
                let (body, head) = node.children.split_last().expect("handler has a body");
                self.visit_all(head);
                if let Some(name) = &node.name {
                    self.bind(name);
                }
                self.visit(body);
            }
            Global | Nonlocal => {}
            _ => self.visit_all(&node.children),
        }
    }
}

/// Def-use edges of every scope, names replaced by binding order.
pub fn dataflow_edges(tree: &SyntaxNode) -> Vec<FlowEdge> {
    let mut b = FlowBuilder { scopes: Vec::new(), opened: 0, edges: Vec::new() };
    b.open();
    b.visit_all(&tree.children);
    b.edges
}

fn edge_counts(edges: Vec<FlowEdge>) -> HashMap<FlowEdge, usize> {
    let mut counts = HashMap::new();
    for e in edges {
        *counts.entry(e).or_insert(0) += 1;
    }
    counts
}

/// Share of the reference's def-use edges found in the candidate; 1 when
/// the reference has none.
pub fn dataflow_match(candidate: &SyntaxNode, reference: &SyntaxNode) -> f64 {
    let reference = edge_counts(dataflow_edges(reference));
    let total: usize = reference.values().sum();
    if total == 0 {
        return 1.0;
    }
    multiset_overlap(&edge_counts(dataflow_edges(candidate)), &reference) as f64 / total as f64
}

/// CodeBLEU of code-token sequences and, when the candidate parsed, trees.
pub fn codebleu(
    candidate_tokens: &[String],
    reference_tokens: &[String],
    candidate_tree: Option<&SyntaxNode>,
    reference_tree: &SyntaxNode,
    keyword_weight: usize,
) -> CodeBleu {
    let refs = [reference_tokens];
    let ngram = bleu(candidate_tokens, &refs);
    let weight = |gram: &[String]| if gram.iter().any(|t| is_keyword(t)) { keyword_weight } else { 1 };
    let weighted_ngram = weighted_bleu(candidate_tokens, &refs, &weight);
    let (syntax, dataflow) = match candidate_tree {
        Some(tree) => (syntax_match(tree, reference_tree), dataflow_match(tree, reference_tree)),
        None => (0.0, 0.0),
    };
    CodeBleu::from_components(ngram, weighted_ngram, syntax, dataflow)
}
