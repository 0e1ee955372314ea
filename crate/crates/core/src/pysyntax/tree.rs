use serde::Serialize;

use super::Span;

/// Node-kind tags of the syntax tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Module,
    Block,
    // statements
    FunctionDef,
    AsyncFunctionDef,
    ClassDef,
    Decorator,
    Parameters,
    Param,
    VarArgParam,
    KwArgParam,
    StarMarker,
    SlashMarker,
    Returns,
    Return,
    Delete,
    Assign,
    AugAssign,
    AnnAssign,
    For,
    AsyncFor,
    While,
    If,
    Elif,
    Else,
    With,
    AsyncWith,
    WithItem,
    Match,
    MatchCase,
    Guard,
    Raise,
    Try,
    ExceptHandler,
    Finally,
    Assert,
    Import,
    ImportFrom,
    Alias,
    Global,
    Nonlocal,
    ExprStmt,
    StringStmt,
    Pass,
    Break,
    Continue,
    // expressions
    BoolOp,
    NamedExpr,
    BinOp,
    UnaryOp,
    Lambda,
    IfExp,
    Dict,
    DictEntry,
    Set,
    List,
    Tuple,
    ListComp,
    SetComp,
    DictComp,
    GeneratorExp,
    CompFor,
    CompIf,
    Await,
    Yield,
    YieldFrom,
    Compare,
    Call,
    Arguments,
    Keyword,
    Starred,
    DoubleStarred,
    Attribute,
    Subscript,
    Slice,
    Name,
    Number,
    String,
    Constant,
    Ellipsis,
    // match patterns
    MatchValue,
    MatchWildcard,
    MatchSequence,
    MatchMapping,
    MatchClass,
    MatchKeyword,
    MatchOr,
    MatchAs,
    MatchStar,
}

impl NodeKind {
    pub fn is_function_def(self) -> bool {
        matches!(self, NodeKind::FunctionDef | NodeKind::AsyncFunctionDef)
    }

    pub fn is_scope(self) -> bool {
        matches!(
            self,
            NodeKind::Module
                | NodeKind::FunctionDef
                | NodeKind::AsyncFunctionDef
                | NodeKind::ClassDef
                | NodeKind::Lambda
        )
    }

    pub fn is_comprehension(self) -> bool {
        matches!(self, NodeKind::ListComp | NodeKind::SetComp | NodeKind::DictComp | NodeKind::GeneratorExp)
    }

    pub fn as_str(self) -> &'static str {
        use NodeKind::*;
        match self {
            Module => "module",
            Block => "block",
            FunctionDef => "function_def",
            AsyncFunctionDef => "async_function_def",
            ClassDef => "class_def",
            Decorator => "decorator",
            Parameters => "parameters",
            Param => "param",
            VarArgParam => "vararg_param",
            KwArgParam => "kwarg_param",
            StarMarker => "star_marker",
            SlashMarker => "slash_marker",
            Returns => "returns",
            Return => "return_stmt",
            Delete => "delete_stmt",
            Assign => "assign",
            AugAssign => "aug_assign",
            AnnAssign => "ann_assign",
            For => "for_stmt",
            AsyncFor => "async_for_stmt",
            While => "while_stmt",
            If => "if_stmt",
            Elif => "elif_clause",
            Else => "else_clause",
            With => "with_stmt",
            AsyncWith => "async_with_stmt",
            WithItem => "with_item",
            Match => "match_stmt",
            MatchCase => "case_clause",
            Guard => "guard",
            Raise => "raise_stmt",
            Try => "try_stmt",
            ExceptHandler => "except_clause",
            Finally => "finally_clause",
            Assert => "assert_stmt",
            Import => "import_stmt",
            ImportFrom => "import_from",
            Alias => "alias",
            Global => "global_stmt",
            Nonlocal => "nonlocal_stmt",
            ExprStmt => "expr_stmt",
            StringStmt => "string_stmt",
            Pass => "pass_stmt",
            Break => "break_stmt",
            Continue => "continue_stmt",
            BoolOp => "bool_op",
            NamedExpr => "named_expr",
            BinOp => "bin_op",
            UnaryOp => "unary_op",
            Lambda => "lambda",
            IfExp => "if_exp",
            Dict => "dict",
            DictEntry => "dict_entry",
            Set => "set",
            List => "list",
            Tuple => "tuple",
            ListComp => "list_comp",
            SetComp => "set_comp",
            DictComp => "dict_comp",
            GeneratorExp => "generator_exp",
            CompFor => "comp_for",
            CompIf => "comp_if",
            Await => "await",
            Yield => "yield",
            YieldFrom => "yield_from",
            Compare => "compare",
            Call => "call",
            Arguments => "arguments",
            Keyword => "keyword",
            Starred => "starred",
            DoubleStarred => "double_starred",
            Attribute => "attribute",
            Subscript => "subscript",
            Slice => "slice",
            Name => "name",
            Number => "number",
            String => "string",
            Constant => "constant",
            Ellipsis => "ellipsis",
            MatchValue => "match_value",
            MatchWildcard => "match_wildcard",
            MatchSequence => "match_sequence",
            MatchMapping => "match_mapping",
            MatchClass => "match_class",
            MatchKeyword => "match_keyword",
            MatchOr => "match_or",
            MatchAs => "match_as",
            MatchStar => "match_star",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExprContext {
    #[default]
    Load,
    Store,
    Del,
}

/// One node of the syntax tree.
///
/// `name` holds the identifier for definitions, names, attributes, params,
/// keywords and aliases; `name_span` locates that identifier in the source.
/// Operator-bearing nodes keep their operator text in `op`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntaxNode {
    pub kind: NodeKind,
    pub span: Span,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<SyntaxNode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip)]
    pub name_span: Option<Span>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub op: Option<String>,
    #[serde(skip_serializing_if = "is_load")]
    pub ctx: ExprContext,
}

fn is_load(ctx: &ExprContext) -> bool {
    *ctx == ExprContext::Load
}

impl SyntaxNode {
    pub fn new(kind: NodeKind, span: Span, children: Vec<SyntaxNode>) -> Self {
        Self { kind, span, children, name: None, name_span: None, op: None, ctx: ExprContext::Load }
    }

    pub fn named(kind: NodeKind, span: Span, name: &str, name_span: Span) -> Self {
        let mut node = Self::new(kind, span, Vec::new());
        node.name = Some(name.to_string());
        node.name_span = Some(name_span);
        node
    }

    pub fn with_op(mut self, op: impl Into<String>) -> Self {
        self.op = Some(op.into());
        self
    }

    pub fn with_name(mut self, name: &str, name_span: Span) -> Self {
        self.name = Some(name.to_string());
        self.name_span = Some(name_span);
        self
    }

    pub fn child(&self, kind: NodeKind) -> Option<&SyntaxNode> {
        self.children.iter().find(|c| c.kind == kind)
    }

    /// Statement body of a compound statement or definition.
    pub fn body(&self) -> Option<&SyntaxNode> {
        self.child(NodeKind::Block)
    }

    pub fn decorators(&self) -> impl Iterator<Item = &SyntaxNode> {
        self.children.iter().filter(|c| c.kind == NodeKind::Decorator)
    }

    /// Start of the definition including any decorators.
    pub fn outer_start(&self) -> usize {
        self.decorators().next().map_or(self.span.start, |d| d.span.start)
    }

    /// The leading string statement of a module, class or function body.
    pub fn docstring(&self) -> Option<&SyntaxNode> {
        let stmts = match self.kind {
            NodeKind::Module => &self.children,
            _ => &self.body()?.children,
        };
        stmts.first().filter(|s| s.kind == NodeKind::StringStmt)
    }

    /// Pre-order traversal.
    pub fn descendants(&self) -> Descendants<'_> {
        Descendants { stack: vec![self] }
    }

    pub fn text<'s>(&self, source: &'s str) -> &'s str {
        &source[self.span.start..self.span.end]
    }
}

pub struct Descendants<'a> {
    stack: Vec<&'a SyntaxNode>,
}

impl<'a> Iterator for Descendants<'a> {
    type Item = &'a SyntaxNode;

    fn next(&mut self) -> Option<Self::Item> {
        let node = self.stack.pop()?;
        self.stack.extend(node.children.iter().rev());
        Some(node)
    }
}
