//! Recursive-descent parser for the Python 3 grammar.
//!
//! Produces a [`SyntaxNode`] tree whose spans point into the original source.
//! Grouping parentheses do not produce nodes; tuples, generator expressions
//! and argument lists include their brackets in the span.

use thiserror::Error;

use super::lexer::{tokenize, Token, TokenKind};
use super::tree::{ExprContext, NodeKind, SyntaxNode};
use super::Span;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} (line {line}, column {column})")]
pub struct ParseError {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn at(source: &str, offset: usize, message: impl Into<String>) -> Self {
        let offset = offset.min(source.len());
        let before = &source.as_bytes()[..offset];
        let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
        let line_start = before.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
        Self { offset, line, column: offset - line_start + 1, message: message.into() }
    }
}

type PResult<T> = Result<T, ParseError>;

/// Parses a whole module.
pub fn parse(source: &str) -> Result<SyntaxNode, ParseError> {
    let tokens = tokenize(source).map_err(|e| ParseError::at(source, e.offset, e.message))?;
    let toks = tokens.into_iter().filter(|t| t.kind != TokenKind::Comment).collect();
    Parser { src: source, toks, pos: 0 }.module()
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token<'a>>,
    pos: usize,
}

use NodeKind as K;
use TokenKind as T;

impl<'a> Parser<'a> {
    // ---- token helpers ----

    fn tok(&self) -> Token<'a> {
        self.toks[self.pos]
    }

    fn nth(&self, n: usize) -> Token<'a> {
        self.toks[(self.pos + n).min(self.toks.len() - 1)]
    }

    fn bump(&mut self) -> Token<'a> {
        let t = self.toks[self.pos];
        if t.kind != T::Eof {
            self.pos += 1;
        }
        t
    }

    fn start(&self) -> usize {
        self.tok().span.start
    }

    fn prev_end(&self) -> usize {
        self.toks[self.pos.saturating_sub(1)].span.end
    }

    fn at_op(&self, op: &str) -> bool {
        self.tok().is_op(op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.tok().is_keyword(kw)
    }

    fn at_kind(&self, kind: TokenKind) -> bool {
        self.tok().kind == kind
    }

    fn eat_op(&mut self, op: &str) -> bool {
        let hit = self.at_op(op);
        if hit {
            self.bump();
        }
        hit
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        let hit = self.at_kw(kw);
        if hit {
            self.bump();
        }
        hit
    }

    fn err<R>(&self, message: impl Into<String>) -> PResult<R> {
        Err(self.err_at(self.start(), message))
    }

    fn err_at(&self, offset: usize, message: impl Into<String>) -> ParseError {
        ParseError::at(self.src, offset, message)
    }

    fn unexpected<R>(&self) -> PResult<R> {
        match self.tok().kind {
            T::Indent => self.err("unexpected indent"),
            T::Eof => self.err("unexpected EOF while parsing"),
            _ => self.err("invalid syntax"),
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<Token<'a>> {
        if self.at_op(op) {
            Ok(self.bump())
        } else if op == ":" {
            self.err("expected ':'")
        } else {
            self.unexpected()
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Token<'a>> {
        if self.at_kw(kw) {
            Ok(self.bump())
        } else {
            self.unexpected()
        }
    }

    fn expect_name(&mut self) -> PResult<Token<'a>> {
        if self.at_kind(T::Name) {
            Ok(self.bump())
        } else {
            self.unexpected()
        }
    }

    fn starts_expr(&self) -> bool {
        let t = self.tok();
        match t.kind {
            T::Name | T::Number | T::String => true,
            T::Keyword => {
                matches!(t.text, "True" | "False" | "None" | "not" | "lambda" | "await")
            }
            T::Op => matches!(t.text, "(" | "[" | "{" | "-" | "+" | "~" | "..." | "*"),
            _ => false,
        }
    }

    fn name_node(&self, t: Token<'a>) -> SyntaxNode {
        SyntaxNode::named(K::Name, t.span, t.text, t.span)
    }

    // ---- statements ----

    fn module(mut self) -> PResult<SyntaxNode> {
        let mut body = Vec::new();
        while !self.at_kind(T::Eof) {
            self.statement(&mut body)?;
        }
        Ok(SyntaxNode::new(K::Module, Span::new(0, self.src.len()), body))
    }

    fn statement(&mut self, out: &mut Vec<SyntaxNode>) -> PResult<()> {
        let t = self.tok();
        match t.kind {
            T::Indent => self.err("unexpected indent"),
            T::Dedent => self.err("unexpected unindent"),
            T::Keyword => match t.text {
                "def" | "class" | "if" | "while" | "for" | "try" | "with" => {
                    out.push(self.compound(Vec::new())?);
                    Ok(())
                }
                "async" if matches!(self.nth(1).text, "def" | "for" | "with") => {
                    out.push(self.compound(Vec::new())?);
                    Ok(())
                }
                _ => self.simple_stmts(out),
            },
            T::Op if t.text == "@" => {
                let decorators = self.decorators()?;
                out.push(self.compound(decorators)?);
                Ok(())
            }
            T::Name if t.text == "match" => {
                if let Some(stmt) = self.try_match_stmt()? {
                    out.push(stmt);
                    Ok(())
                } else {
                    self.simple_stmts(out)
                }
            }
            _ => self.simple_stmts(out),
        }
    }

    fn decorators(&mut self) -> PResult<Vec<SyntaxNode>> {
        let mut decorators = Vec::new();
        while self.at_op("@") {
            let start = self.bump().span.start;
            let expr = self.named_expression()?;
            if !self.at_kind(T::Newline) {
                return self.unexpected();
            }
            self.bump();
            decorators.push(SyntaxNode::new(K::Decorator, Span::new(start, expr.span.end), vec![expr]));
        }
        let t = self.tok();
        let ok =
            t.is_keyword("def") || t.is_keyword("class") || (t.is_keyword("async") && self.nth(1).is_keyword("def"));
        if !ok {
            return self.unexpected();
        }
        Ok(decorators)
    }

    fn compound(&mut self, decorators: Vec<SyntaxNode>) -> PResult<SyntaxNode> {
        let start = decorators.first().map_or(self.start(), |d| d.span.start);
        let is_async = self.at_kw("async");
        let head = if is_async { self.nth(1).text } else { self.tok().text };
        match head {
            "def" => self.funcdef(decorators),
            "class" => self.classdef(decorators),
            "if" => self.if_stmt(),
            "while" => self.while_stmt(),
            "for" => self.for_stmt(start),
            "try" => self.try_stmt(),
            "with" => self.with_stmt(start),
            _ => self.unexpected(),
        }
    }

    fn block(&mut self) -> PResult<SyntaxNode> {
        let mut stmts = Vec::new();
        if self.at_kind(T::Newline) {
            self.bump();
            if !self.at_kind(T::Indent) {
                return self.err("expected an indented block");
            }
            self.bump();
            while !self.at_kind(T::Dedent) && !self.at_kind(T::Eof) {
                self.statement(&mut stmts)?;
            }
            if !self.at_kind(T::Dedent) {
                return self.unexpected();
            }
            self.bump();
        } else {
            self.simple_stmts(&mut stmts)?;
        }
        let span = Span::new(
            stmts.first().map_or(self.start(), |s| s.span.start),
            stmts.last().map_or(self.start(), |s| s.span.end),
        );
        Ok(SyntaxNode::new(K::Block, span, stmts))
    }

    fn funcdef(&mut self, mut children: Vec<SyntaxNode>) -> PResult<SyntaxNode> {
        let start = children.first().map_or(self.start(), |d| d.span.start);
        let is_async = self.eat_kw("async");
        self.expect_kw("def")?;
        let name = self.expect_name()?;
        let open = self.expect_op("(")?;
        let params = self.params(true, ")")?;
        let close = self.expect_op(")")?;
        children.push(SyntaxNode::new(K::Parameters, Span::new(open.span.start, close.span.end), params));
        if self.at_op("->") {
            let arrow = self.bump().span.start;
            let ann = self.expression()?;
            children.push(SyntaxNode::new(K::Returns, Span::new(arrow, ann.span.end), vec![ann]));
        }
        self.expect_op(":")?;
        let body = self.block()?;
        let end = body.span.end;
        children.push(body);
        let kind = if is_async { K::AsyncFunctionDef } else { K::FunctionDef };
        Ok(SyntaxNode::new(kind, Span::new(start, end), children).with_name(name.text, name.span))
    }

    fn classdef(&mut self, mut children: Vec<SyntaxNode>) -> PResult<SyntaxNode> {
        let start = children.first().map_or(self.start(), |d| d.span.start);
        self.expect_kw("class")?;
        let name = self.expect_name()?;
        if self.at_op("(") {
            children.push(self.call_arguments()?);
        }
        self.expect_op(":")?;
        let body = self.block()?;
        let end = body.span.end;
        children.push(body);
        Ok(SyntaxNode::new(K::ClassDef, Span::new(start, end), children).with_name(name.text, name.span))
    }

    fn else_clause(&mut self, kind: NodeKind, kw: &str) -> PResult<SyntaxNode> {
        let start = self.expect_kw(kw)?.span.start;
        self.expect_op(":")?;
        let body = self.block()?;
        Ok(SyntaxNode::new(kind, Span::new(start, body.span.end), vec![body]))
    }

    fn if_stmt(&mut self) -> PResult<SyntaxNode> {
        let start = self.expect_kw("if")?.span.start;
        let test = self.named_expression()?;
        self.expect_op(":")?;
        let mut children = vec![test, self.block()?];
        while self.at_kw("elif") {
            let estart = self.bump().span.start;
            let test = self.named_expression()?;
            self.expect_op(":")?;
            let body = self.block()?;
            children.push(SyntaxNode::new(K::Elif, Span::new(estart, body.span.end), vec![test, body]));
        }
        if self.at_kw("else") {
            children.push(self.else_clause(K::Else, "else")?);
        }
        let end = children.last().expect("non-empty").span.end;
        Ok(SyntaxNode::new(K::If, Span::new(start, end), children))
    }

    fn while_stmt(&mut self) -> PResult<SyntaxNode> {
        let start = self.expect_kw("while")?.span.start;
        let test = self.named_expression()?;
        self.expect_op(":")?;
        let mut children = vec![test, self.block()?];
        if self.at_kw("else") {
            children.push(self.else_clause(K::Else, "else")?);
        }
        let end = children.last().expect("non-empty").span.end;
        Ok(SyntaxNode::new(K::While, Span::new(start, end), children))
    }

    fn for_stmt(&mut self, start: usize) -> PResult<SyntaxNode> {
        let is_async = self.eat_kw("async");
        self.expect_kw("for")?;
        let target = self.star_targets()?;
        self.expect_kw("in")?;
        let iter = self.star_expressions()?;
        self.expect_op(":")?;
        let mut children = vec![target, iter, self.block()?];
        if self.at_kw("else") {
            children.push(self.else_clause(K::Else, "else")?);
        }
        let end = children.last().expect("non-empty").span.end;
        let kind = if is_async { K::AsyncFor } else { K::For };
        Ok(SyntaxNode::new(kind, Span::new(start, end), children))
    }

    fn try_stmt(&mut self) -> PResult<SyntaxNode> {
        let start = self.expect_kw("try")?.span.start;
        self.expect_op(":")?;
        let mut children = vec![self.block()?];
        let mut handlers = 0;
        while self.at_kw("except") {
            let hstart = self.bump().span.start;
            let mut hchildren = Vec::new();
            let mut name = None;
            if !self.at_op(":") {
                let ty = self.expression()?;
                if self.at_op(",") {
                    return self.err("multiple exception types must be parenthesized");
                }
                hchildren.push(ty);
                if self.eat_kw("as") {
                    name = Some(self.expect_name()?);
                }
            }
            self.expect_op(":")?;
            let body = self.block()?;
            let end = body.span.end;
            hchildren.push(body);
            let mut handler = SyntaxNode::new(K::ExceptHandler, Span::new(hstart, end), hchildren);
            if let Some(n) = name {
                handler = handler.with_name(n.text, n.span);
            }
            children.push(handler);
            handlers += 1;
        }
        if handlers > 0 && self.at_kw("else") {
            children.push(self.else_clause(K::Else, "else")?);
        }
        if self.at_kw("finally") {
            children.push(self.else_clause(K::Finally, "finally")?);
        } else if handlers == 0 {
            return self.err("expected 'except' or 'finally' block");
        }
        let end = children.last().expect("non-empty").span.end;
        Ok(SyntaxNode::new(K::Try, Span::new(start, end), children))
    }

    fn with_stmt(&mut self, start: usize) -> PResult<SyntaxNode> {
        let is_async = self.eat_kw("async");
        self.expect_kw("with")?;
        let mut items = None;
        if self.at_op("(") {
            let save = self.pos;
            match self.paren_with_items() {
                Ok(parsed) if self.at_op(":") => items = Some(parsed),
                _ => self.pos = save,
            }
        }
        let mut children = match items {
            Some(items) => items,
            None => {
                let mut items = vec![self.with_item()?];
                while self.eat_op(",") {
                    items.push(self.with_item()?);
                }
                items
            }
        };
        self.expect_op(":")?;
        let body = self.block()?;
        let end = body.span.end;
        children.push(body);
        let kind = if is_async { K::AsyncWith } else { K::With };
        Ok(SyntaxNode::new(kind, Span::new(start, end), children))
    }

    fn paren_with_items(&mut self) -> PResult<Vec<SyntaxNode>> {
        self.expect_op("(")?;
        let mut items = Vec::new();
        loop {
            items.push(self.with_item()?);
            if !self.eat_op(",") || self.at_op(")") {
                break;
            }
        }
        self.expect_op(")")?;
        Ok(items)
    }

    fn with_item(&mut self) -> PResult<SyntaxNode> {
        let expr = self.expression()?;
        let start = expr.span.start;
        let mut children = vec![expr];
        if self.eat_kw("as") {
            let mut target = self.target_elem()?;
            self.set_ctx(&mut target, ExprContext::Store)?;
            children.push(target);
        }
        let end = children.last().expect("non-empty").span.end;
        Ok(SyntaxNode::new(K::WithItem, Span::new(start, end), children))
    }

    fn simple_stmts(&mut self, out: &mut Vec<SyntaxNode>) -> PResult<()> {
        loop {
            out.push(self.simple_stmt()?);
            if self.eat_op(";") {
                if self.at_kind(T::Newline) {
                    break;
                }
                continue;
            }
            break;
        }
        if !self.at_kind(T::Newline) {
            return self.unexpected();
        }
        self.bump();
        Ok(())
    }

    fn keyword_stmt(&mut self, kind: NodeKind) -> SyntaxNode {
        let t = self.bump();
        SyntaxNode::new(kind, t.span, Vec::new())
    }

    fn simple_stmt(&mut self) -> PResult<SyntaxNode> {
        let t = self.tok();
        if t.kind != T::Keyword {
            return self.expr_or_assign();
        }
        let start = t.span.start;
        match t.text {
            "pass" => Ok(self.keyword_stmt(K::Pass)),
            "break" => Ok(self.keyword_stmt(K::Break)),
            "continue" => Ok(self.keyword_stmt(K::Continue)),
            "return" => {
                self.bump();
                let children = if self.starts_expr() { vec![self.star_expressions()?] } else { Vec::new() };
                Ok(SyntaxNode::new(K::Return, Span::new(start, self.prev_end()), children))
            }
            "raise" => {
                self.bump();
                let mut children = Vec::new();
                if self.starts_expr() {
                    children.push(self.expression()?);
                    if self.eat_kw("from") {
                        children.push(self.expression()?);
                    }
                }
                Ok(SyntaxNode::new(K::Raise, Span::new(start, self.prev_end()), children))
            }
            "global" | "nonlocal" => {
                self.bump();
                let mut children = vec![];
                loop {
                    let n = self.expect_name()?;
                    children.push(self.name_node(n));
                    if !self.eat_op(",") {
                        break;
                    }
                }
                let kind = if t.text == "global" { K::Global } else { K::Nonlocal };
                Ok(SyntaxNode::new(kind, Span::new(start, self.prev_end()), children))
            }
            "del" => {
                self.bump();
                let mut targets = self.star_targets_raw()?;
                self.set_ctx(&mut targets, ExprContext::Del)?;
                Ok(SyntaxNode::new(K::Delete, Span::new(start, self.prev_end()), vec![targets]))
            }
            "assert" => {
                self.bump();
                let mut children = vec![self.expression()?];
                if self.eat_op(",") {
                    children.push(self.expression()?);
                }
                Ok(SyntaxNode::new(K::Assert, Span::new(start, self.prev_end()), children))
            }
            "import" => self.import_stmt(),
            "from" => self.import_from(),
            _ => self.expr_or_assign(),
        }
    }

    fn rhs(&mut self) -> PResult<SyntaxNode> {
        if self.at_kw("yield") {
            self.yield_expr()
        } else {
            self.star_expressions()
        }
    }

    fn expr_or_assign(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        let first = self.rhs()?;
        if self.at_op("=") {
            let mut parts = vec![first];
            while self.eat_op("=") {
                parts.push(self.rhs()?);
            }
            let value = parts.pop().expect("non-empty");
            for target in &mut parts {
                if target.kind == K::Yield || target.kind == K::YieldFrom {
                    return Err(self.err_at(target.span.start, "assignment to yield expression not possible"));
                }
                self.set_ctx(target, ExprContext::Store)?;
            }
            parts.push(value);
            return Ok(SyntaxNode::new(K::Assign, Span::new(start, self.prev_end()), parts));
        }
        if self.at_op(":") {
            let mut target = first;
            match target.kind {
                K::Name | K::Attribute | K::Subscript => {}
                K::Tuple => {
                    return Err(self.err_at(target.span.start, "only single target (not tuple) can be annotated"))
                }
                K::List => return Err(self.err_at(target.span.start, "only single target (not list) can be annotated")),
                _ => return Err(self.err_at(target.span.start, "illegal target for annotation")),
            }
            self.set_ctx(&mut target, ExprContext::Store)?;
            self.bump();
            let mut children = vec![target, self.expression()?];
            if self.eat_op("=") {
                children.push(self.rhs()?);
            }
            return Ok(SyntaxNode::new(K::AnnAssign, Span::new(start, self.prev_end()), children));
        }
        const AUG: &[&str] = &["+=", "-=", "*=", "/=", "//=", "%=", "@=", "&=", "|=", "^=", ">>=", "<<=", "**="];
        let t = self.tok();
        if t.kind == T::Op && AUG.contains(&t.text) {
            let mut target = first;
            if !matches!(target.kind, K::Name | K::Attribute | K::Subscript) {
                return Err(self.err_at(target.span.start, "illegal expression for augmented assignment"));
            }
            self.set_ctx(&mut target, ExprContext::Store)?;
            self.bump();
            let value = self.rhs()?;
            return Ok(
                SyntaxNode::new(K::AugAssign, Span::new(start, self.prev_end()), vec![target, value]).with_op(t.text)
            );
        }
        let kind = if first.kind == K::String { K::StringStmt } else { K::ExprStmt };
        Ok(SyntaxNode::new(kind, first.span, vec![first]))
    }

    fn dotted_name(&mut self) -> PResult<(String, Span)> {
        let first = self.expect_name()?;
        let mut name = first.text.to_string();
        let mut end = first.span.end;
        while self.at_op(".") && self.nth(1).kind == T::Name {
            self.bump();
            let part = self.bump();
            name.push('.');
            name.push_str(part.text);
            end = part.span.end;
        }
        Ok((name, Span::new(first.span.start, end)))
    }

    fn alias_tail(&mut self, name: &str, name_span: Span) -> PResult<SyntaxNode> {
        let mut node = SyntaxNode::new(K::Alias, name_span, Vec::new()).with_name(name, name_span);
        if self.eat_kw("as") {
            let n = self.expect_name()?;
            let mut bound = self.name_node(n);
            bound.ctx = ExprContext::Store;
            node.span.end = n.span.end;
            node.children.push(bound);
        }
        Ok(node)
    }

    fn import_stmt(&mut self) -> PResult<SyntaxNode> {
        let start = self.expect_kw("import")?.span.start;
        let mut children = Vec::new();
        loop {
            let (name, span) = self.dotted_name()?;
            children.push(self.alias_tail(&name, span)?);
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(SyntaxNode::new(K::Import, Span::new(start, self.prev_end()), children))
    }

    fn import_from(&mut self) -> PResult<SyntaxNode> {
        let start = self.expect_kw("from")?.span.start;
        let mut module = String::new();
        while self.at_op(".") || self.at_op("...") {
            module.push_str(self.bump().text);
        }
        if self.at_kind(T::Name) {
            let (name, _) = self.dotted_name()?;
            module.push_str(&name);
        } else if module.is_empty() {
            return self.unexpected();
        }
        self.expect_kw("import")?;
        let mut children = Vec::new();
        if self.at_op("*") {
            let t = self.bump();
            children.push(SyntaxNode::new(K::Alias, t.span, Vec::new()).with_name("*", t.span));
        } else {
            let parens = self.eat_op("(");
            loop {
                let n = self.expect_name()?;
                children.push(self.alias_tail(n.text, n.span)?);
                if !self.eat_op(",") {
                    break;
                }
                if parens && self.at_op(")") {
                    break;
                }
                if !parens && !self.at_kind(T::Name) {
                    return self.err("trailing comma not allowed without surrounding parentheses");
                }
            }
            if parens {
                self.expect_op(")")?;
            }
        }
        let mut node = SyntaxNode::new(K::ImportFrom, Span::new(start, self.prev_end()), children);
        node.name = Some(module);
        Ok(node)
    }

    // ---- match statement ----

    fn try_match_stmt(&mut self) -> PResult<Option<SyntaxNode>> {
        let save = self.pos;
        let start = self.bump().span.start;
        let subject = match self.match_subject() {
            Ok(s) => s,
            Err(_) => {
                self.pos = save;
                return Ok(None);
            }
        };
        let is_match = self.at_op(":")
            && self.nth(1).kind == T::Newline
            && self.nth(2).kind == T::Indent
            && self.nth(3).kind == T::Name
            && self.nth(3).text == "case";
        if !is_match {
            self.pos = save;
            return Ok(None);
        }
        self.bump();
        self.bump();
        self.bump();
        let mut children = vec![subject];
        while self.at_kind(T::Name) && self.tok().text == "case" {
            children.push(self.case_block()?);
        }
        if !self.at_kind(T::Dedent) {
            return self.unexpected();
        }
        self.bump();
        let end = children.last().expect("non-empty").span.end;
        Ok(Some(SyntaxNode::new(K::Match, Span::new(start, end), children)))
    }

    fn match_subject(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        let first = self.star_named_expression()?;
        if !self.at_op(",") {
            if first.kind == K::Starred {
                return self.unexpected();
            }
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if !self.starts_expr() {
                break;
            }
            items.push(self.star_named_expression()?);
        }
        Ok(SyntaxNode::new(K::Tuple, Span::new(start, self.prev_end()), items))
    }

    fn case_block(&mut self) -> PResult<SyntaxNode> {
        let start = self.bump().span.start;
        let mut children = vec![self.patterns()?];
        if self.at_kw("if") {
            let gstart = self.bump().span.start;
            let cond = self.named_expression()?;
            children.push(SyntaxNode::new(K::Guard, Span::new(gstart, cond.span.end), vec![cond]));
        }
        self.expect_op(":")?;
        let body = self.block()?;
        let end = body.span.end;
        children.push(body);
        Ok(SyntaxNode::new(K::MatchCase, Span::new(start, end), children))
    }

    fn patterns(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        let first = self.maybe_star_pattern()?;
        if !self.at_op(",") {
            if first.kind == K::MatchStar {
                return Err(self.err_at(first.span.start, "invalid syntax"));
            }
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op(":") || self.at_kw("if") {
                break;
            }
            items.push(self.maybe_star_pattern()?);
        }
        Ok(SyntaxNode::new(K::MatchSequence, Span::new(start, self.prev_end()), items))
    }

    fn maybe_star_pattern(&mut self) -> PResult<SyntaxNode> {
        if self.at_op("*") {
            let start = self.bump().span.start;
            let n = self.expect_name()?;
            let mut node = SyntaxNode::new(K::MatchStar, Span::new(start, n.span.end), Vec::new());
            if n.text != "_" {
                let mut bound = self.name_node(n);
                bound.ctx = ExprContext::Store;
                node.children.push(bound);
            }
            return Ok(node);
        }
        self.pattern()
    }

    fn pattern(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        let first = self.closed_pattern()?;
        let p = if self.at_op("|") {
            let mut alts = vec![first];
            while self.eat_op("|") {
                alts.push(self.closed_pattern()?);
            }
            SyntaxNode::new(K::MatchOr, Span::new(start, self.prev_end()), alts)
        } else {
            first
        };
        if self.eat_kw("as") {
            let n = self.expect_name()?;
            if n.text == "_" {
                return Err(self.err_at(n.span.start, "cannot use '_' as a target"));
            }
            let mut bound = self.name_node(n);
            bound.ctx = ExprContext::Store;
            return Ok(SyntaxNode::new(K::MatchAs, Span::new(start, n.span.end), vec![p, bound]));
        }
        Ok(p)
    }

    fn literal_pattern(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        let value = match self.tok().kind {
            T::String => self.strings()?,
            T::Keyword => {
                let t = self.bump();
                SyntaxNode::named(K::Constant, t.span, t.text, t.span)
            }
            _ => {
                let neg = self.at_op("-");
                if neg {
                    self.bump();
                }
                if !self.at_kind(T::Number) {
                    return self.unexpected();
                }
                let n = self.bump();
                let mut node = SyntaxNode::new(K::Number, Span::new(start, n.span.end), Vec::new());
                if neg {
                    node = SyntaxNode::new(K::UnaryOp, node.span, vec![node]).with_op("-");
                }
                if (self.at_op("+") || self.at_op("-")) && self.nth(1).kind == T::Number {
                    let op = self.bump().text;
                    let imag = self.bump();
                    let rhs = SyntaxNode::new(K::Number, imag.span, Vec::new());
                    node = SyntaxNode::new(K::BinOp, Span::new(start, imag.span.end), vec![node, rhs]).with_op(op);
                }
                node
            }
        };
        Ok(SyntaxNode::new(K::MatchValue, value.span, vec![value]))
    }

    fn dotted_value(&mut self) -> PResult<SyntaxNode> {
        let first = self.expect_name()?;
        let mut node = self.name_node(first);
        while self.at_op(".") {
            self.bump();
            let attr = self.expect_name()?;
            node = SyntaxNode::new(K::Attribute, Span::new(node.span.start, attr.span.end), vec![node])
                .with_name(attr.text, attr.span);
        }
        Ok(node)
    }

    fn closed_pattern(&mut self) -> PResult<SyntaxNode> {
        let t = self.tok();
        let start = t.span.start;
        match t.kind {
            T::Number | T::String => self.literal_pattern(),
            T::Op if t.text == "-" => self.literal_pattern(),
            T::Keyword if matches!(t.text, "None" | "True" | "False") => self.literal_pattern(),
            T::Name => {
                let value = self.dotted_value()?;
                if self.at_op("(") {
                    return self.class_pattern(value);
                }
                if value.kind == K::Attribute {
                    return Ok(SyntaxNode::new(K::MatchValue, value.span, vec![value]));
                }
                if t.text == "_" {
                    return Ok(SyntaxNode::new(K::MatchWildcard, t.span, Vec::new()));
                }
                let mut bound = value;
                bound.ctx = ExprContext::Store;
                Ok(bound)
            }
            T::Op if t.text == "(" || t.text == "[" => {
                self.bump();
                let close = if t.text == "(" { ")" } else { "]" };
                let mut items = Vec::new();
                let mut trailing_comma = false;
                while !self.at_op(close) {
                    items.push(self.maybe_star_pattern()?);
                    trailing_comma = self.eat_op(",");
                    if !trailing_comma {
                        break;
                    }
                }
                self.expect_op(close)?;
                if close == ")" && items.len() == 1 && !trailing_comma {
                    let inner = items.pop().expect("one item");
                    if inner.kind == K::MatchStar {
                        return Err(self.err_at(inner.span.start, "invalid syntax"));
                    }
                    return Ok(inner);
                }
                Ok(SyntaxNode::new(K::MatchSequence, Span::new(start, self.prev_end()), items))
            }
            T::Op if t.text == "{" => {
                self.bump();
                let mut items = Vec::new();
                while !self.at_op("}") {
                    if self.at_op("**") {
                        let s = self.bump().span.start;
                        let n = self.expect_name()?;
                        let mut bound = self.name_node(n);
                        bound.ctx = ExprContext::Store;
                        items.push(SyntaxNode::new(K::DoubleStarred, Span::new(s, n.span.end), vec![bound]));
                    } else {
                        let key = if self.at_kind(T::Name) {
                            let v = self.dotted_value()?;
                            if v.kind != K::Attribute {
                                return Err(self.err_at(v.span.start, "invalid syntax"));
                            }
                            v
                        } else {
                            self.literal_pattern()?
                        };
                        self.expect_op(":")?;
                        let value = self.pattern()?;
                        items.push(SyntaxNode::new(
                            K::DictEntry,
                            Span::new(key.span.start, value.span.end),
                            vec![key, value],
                        ));
                    }
                    if !self.eat_op(",") {
                        break;
                    }
                }
                self.expect_op("}")?;
                Ok(SyntaxNode::new(K::MatchMapping, Span::new(start, self.prev_end()), items))
            }
            _ => self.unexpected(),
        }
    }

    fn class_pattern(&mut self, class: SyntaxNode) -> PResult<SyntaxNode> {
        let start = class.span.start;
        self.expect_op("(")?;
        let mut children = vec![class];
        let mut seen_keyword = false;
        while !self.at_op(")") {
            if self.at_kind(T::Name) && self.nth(1).is_op("=") {
                let n = self.bump();
                self.bump();
                let value = self.pattern()?;
                children.push(
                    SyntaxNode::new(K::MatchKeyword, Span::new(n.span.start, value.span.end), vec![value])
                        .with_name(n.text, n.span),
                );
                seen_keyword = true;
            } else {
                if seen_keyword {
                    return self.err("positional patterns follow keyword patterns");
                }
                children.push(self.pattern()?);
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        Ok(SyntaxNode::new(K::MatchClass, Span::new(start, self.prev_end()), children))
    }

    // ---- targets ----

    fn set_ctx(&self, node: &mut SyntaxNode, ctx: ExprContext) -> PResult<()> {
        match node.kind {
            K::Name | K::Attribute | K::Subscript => {
                node.ctx = ctx;
                Ok(())
            }
            K::Tuple | K::List => {
                node.ctx = ctx;
                for child in &mut node.children {
                    self.set_ctx(child, ctx)?;
                }
                Ok(())
            }
            K::Starred if ctx == ExprContext::Store => {
                node.ctx = ctx;
                self.set_ctx(&mut node.children[0], ctx)
            }
            kind => {
                let verb = if ctx == ExprContext::Del { "delete" } else { "assign to" };
                let what = match kind {
                    K::Constant => node.name.clone().unwrap_or_default(),
                    K::Number | K::String => "literal".to_string(),
                    K::Call => "function call".to_string(),
                    _ => "expression".to_string(),
                };
                Err(self.err_at(node.span.start, format!("cannot {verb} {what}")))
            }
        }
    }

    fn target_elem(&mut self) -> PResult<SyntaxNode> {
        if self.at_op("*") {
            let start = self.bump().span.start;
            let inner = self.bitwise_or()?;
            return Ok(SyntaxNode::new(K::Starred, Span::new(start, inner.span.end), vec![inner]));
        }
        self.bitwise_or()
    }

    fn star_targets_raw(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        let first = self.target_elem()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            let t = self.tok();
            let more = matches!(t.kind, T::Name) || t.is_op("(") || t.is_op("[") || t.is_op("*");
            if !more {
                break;
            }
            items.push(self.target_elem()?);
        }
        Ok(SyntaxNode::new(K::Tuple, Span::new(start, self.prev_end()), items))
    }

    fn star_targets(&mut self) -> PResult<SyntaxNode> {
        let mut targets = self.star_targets_raw()?;
        self.set_ctx(&mut targets, ExprContext::Store)?;
        Ok(targets)
    }

    // ---- parameters ----

    fn params(&mut self, annotations: bool, close: &str) -> PResult<Vec<SyntaxNode>> {
        let mut out = Vec::new();
        let mut seen_default = false;
        let mut star_seen = false;
        let mut bare_star_pending = false;
        let mut slash_seen = false;
        let mut kwarg_seen = false;
        while !self.at_op(close) {
            if kwarg_seen {
                return self.err("arguments cannot follow var-keyword argument");
            }
            let t = self.tok();
            let start = t.span.start;
            if t.is_op("/") {
                if out.is_empty() || slash_seen || star_seen {
                    return self.err("invalid syntax");
                }
                self.bump();
                slash_seen = true;
                out.push(SyntaxNode::new(K::SlashMarker, t.span, Vec::new()));
            } else if t.is_op("*") {
                if star_seen {
                    return self.err("* argument may appear only once");
                }
                self.bump();
                star_seen = true;
                if self.at_kind(T::Name) {
                    let n = self.bump();
                    let mut children = Vec::new();
                    if annotations && self.eat_op(":") {
                        children.push(self.expression()?);
                    }
                    out.push(
                        SyntaxNode::new(K::VarArgParam, Span::new(start, self.prev_end()), children)
                            .with_name(n.text, n.span),
                    );
                } else {
                    bare_star_pending = true;
                    out.push(SyntaxNode::new(K::StarMarker, t.span, Vec::new()));
                }
            } else if t.is_op("**") {
                self.bump();
                let n = self.expect_name()?;
                let mut children = Vec::new();
                if annotations && self.eat_op(":") {
                    children.push(self.expression()?);
                }
                kwarg_seen = true;
                if bare_star_pending {
                    return self.err("named arguments must follow bare *");
                }
                out.push(
                    SyntaxNode::new(K::KwArgParam, Span::new(start, self.prev_end()), children)
                        .with_name(n.text, n.span),
                );
            } else if t.kind == T::Name {
                let n = self.bump();
                let mut children = Vec::new();
                if annotations && self.eat_op(":") {
                    children.push(self.expression()?);
                }
                if self.eat_op("=") {
                    children.push(self.expression()?);
                    if !star_seen {
                        seen_default = true;
                    }
                } else if seen_default && !star_seen {
                    return Err(self.err_at(start, "non-default argument follows default argument"));
                }
                bare_star_pending = false;
                out.push(
                    SyntaxNode::new(K::Param, Span::new(start, self.prev_end()), children).with_name(n.text, n.span),
                );
            } else {
                return self.unexpected();
            }
            if !self.eat_op(",") {
                break;
            }
        }
        if bare_star_pending {
            return self.err("named arguments must follow bare *");
        }
        Ok(out)
    }

    // ---- expressions ----

    fn star_expressions(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        let first = self.star_expression()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if !self.starts_expr() {
                break;
            }
            items.push(self.star_expression()?);
        }
        Ok(SyntaxNode::new(K::Tuple, Span::new(start, self.prev_end()), items))
    }

    fn star_expression(&mut self) -> PResult<SyntaxNode> {
        if self.at_op("*") {
            let start = self.bump().span.start;
            let inner = self.bitwise_or()?;
            return Ok(SyntaxNode::new(K::Starred, Span::new(start, inner.span.end), vec![inner]));
        }
        self.expression()
    }

    fn star_named_expression(&mut self) -> PResult<SyntaxNode> {
        if self.at_op("*") {
            let start = self.bump().span.start;
            let inner = self.bitwise_or()?;
            return Ok(SyntaxNode::new(K::Starred, Span::new(start, inner.span.end), vec![inner]));
        }
        self.named_expression()
    }

    fn named_expression(&mut self) -> PResult<SyntaxNode> {
        if self.at_kind(T::Name) && self.nth(1).is_op(":=") {
            let n = self.bump();
            self.bump();
            let value = self.expression()?;
            let mut target = self.name_node(n);
            target.ctx = ExprContext::Store;
            return Ok(SyntaxNode::new(K::NamedExpr, Span::new(n.span.start, value.span.end), vec![target, value]));
        }
        let expr = self.expression()?;
        if self.at_op(":=") {
            return self.err("cannot use assignment expressions with this target");
        }
        Ok(expr)
    }

    fn expression(&mut self) -> PResult<SyntaxNode> {
        if self.at_kw("lambda") {
            return self.lambdef();
        }
        let body = self.disjunction()?;
        if self.at_kw("if") {
            self.bump();
            let test = self.disjunction()?;
            self.expect_kw("else")?;
            let orelse = self.expression()?;
            let span = Span::new(body.span.start, orelse.span.end);
            return Ok(SyntaxNode::new(K::IfExp, span, vec![body, test, orelse]));
        }
        Ok(body)
    }

    fn lambdef(&mut self) -> PResult<SyntaxNode> {
        let start = self.expect_kw("lambda")?.span.start;
        let pstart = self.start();
        let params = self.params(false, ":")?;
        let pend = params.last().map_or(pstart, |p| p.span.end);
        self.expect_op(":")?;
        let body = self.expression()?;
        let params = SyntaxNode::new(K::Parameters, Span::new(pstart, pend.max(pstart)), params);
        Ok(SyntaxNode::new(K::Lambda, Span::new(start, body.span.end), vec![params, body]))
    }

    fn bool_chain(&mut self, kw: &'static str, next: fn(&mut Self) -> PResult<SyntaxNode>) -> PResult<SyntaxNode> {
        let first = next(self)?;
        if !self.at_kw(kw) {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_kw(kw) {
            items.push(next(self)?);
        }
        let span = Span::new(items[0].span.start, items.last().expect("non-empty").span.end);
        Ok(SyntaxNode::new(K::BoolOp, span, items).with_op(kw))
    }

    fn disjunction(&mut self) -> PResult<SyntaxNode> {
        self.bool_chain("or", Self::conjunction)
    }

    fn conjunction(&mut self) -> PResult<SyntaxNode> {
        self.bool_chain("and", Self::inversion)
    }

    fn inversion(&mut self) -> PResult<SyntaxNode> {
        if self.at_kw("not") {
            let start = self.bump().span.start;
            let operand = self.inversion()?;
            return Ok(SyntaxNode::new(K::UnaryOp, Span::new(start, operand.span.end), vec![operand]).with_op("not"));
        }
        self.comparison()
    }

    fn compare_op(&mut self) -> Option<&'static str> {
        let t = self.tok();
        let op = match (t.kind, t.text) {
            (T::Op, "==") => "==",
            (T::Op, "!=") => "!=",
            (T::Op, "<") => "<",
            (T::Op, "<=") => "<=",
            (T::Op, ">") => ">",
            (T::Op, ">=") => ">=",
            (T::Keyword, "in") => "in",
            (T::Keyword, "not") if self.nth(1).is_keyword("in") => {
                self.bump();
                "not in"
            }
            (T::Keyword, "is") if self.nth(1).is_keyword("not") => {
                self.bump();
                "is not"
            }
            (T::Keyword, "is") => "is",
            _ => return None,
        };
        self.bump();
        Some(op)
    }

    fn comparison(&mut self) -> PResult<SyntaxNode> {
        let first = self.bitwise_or()?;
        let mut ops: Vec<&str> = Vec::new();
        let mut items = vec![first];
        while let Some(op) = self.compare_op() {
            ops.push(op);
            items.push(self.bitwise_or()?);
        }
        if ops.is_empty() {
            return Ok(items.pop().expect("one item"));
        }
        let span = Span::new(items[0].span.start, items.last().expect("non-empty").span.end);
        Ok(SyntaxNode::new(K::Compare, span, items).with_op(ops.join(",")))
    }

    fn binary(&mut self, ops: &[&'static str], next: fn(&mut Self) -> PResult<SyntaxNode>) -> PResult<SyntaxNode> {
        let mut left = next(self)?;
        while let Some(&op) = ops.iter().find(|o| self.at_op(o)) {
            self.bump();
            let right = next(self)?;
            let span = Span::new(left.span.start, right.span.end);
            left = SyntaxNode::new(K::BinOp, span, vec![left, right]).with_op(op);
        }
        Ok(left)
    }

    fn bitwise_or(&mut self) -> PResult<SyntaxNode> {
        self.binary(&["|"], Self::bitwise_xor)
    }

    fn bitwise_xor(&mut self) -> PResult<SyntaxNode> {
        self.binary(&["^"], Self::bitwise_and)
    }

    fn bitwise_and(&mut self) -> PResult<SyntaxNode> {
        self.binary(&["&"], Self::shift_expr)
    }

    fn shift_expr(&mut self) -> PResult<SyntaxNode> {
        self.binary(&["<<", ">>"], Self::sum)
    }

    fn sum(&mut self) -> PResult<SyntaxNode> {
        self.binary(&["+", "-"], Self::term)
    }

    fn term(&mut self) -> PResult<SyntaxNode> {
        self.binary(&["*", "/", "//", "%", "@"], Self::factor)
    }

    fn factor(&mut self) -> PResult<SyntaxNode> {
        let t = self.tok();
        if t.kind == T::Op && matches!(t.text, "+" | "-" | "~") {
            self.bump();
            let operand = self.factor()?;
            return Ok(
                SyntaxNode::new(K::UnaryOp, Span::new(t.span.start, operand.span.end), vec![operand]).with_op(t.text)
            );
        }
        self.power()
    }

    fn power(&mut self) -> PResult<SyntaxNode> {
        let base = self.await_primary()?;
        if self.eat_op("**") {
            let exp = self.factor()?;
            let span = Span::new(base.span.start, exp.span.end);
            return Ok(SyntaxNode::new(K::BinOp, span, vec![base, exp]).with_op("**"));
        }
        Ok(base)
    }

    fn await_primary(&mut self) -> PResult<SyntaxNode> {
        if self.at_kw("await") {
            let start = self.bump().span.start;
            let operand = self.primary()?;
            return Ok(SyntaxNode::new(K::Await, Span::new(start, operand.span.end), vec![operand]));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<SyntaxNode> {
        let mut node = self.atom()?;
        loop {
            if self.at_op(".") {
                self.bump();
                let attr = self.expect_name()?;
                node = SyntaxNode::new(K::Attribute, Span::new(node.span.start, attr.span.end), vec![node])
                    .with_name(attr.text, attr.span);
            } else if self.at_op("(") {
                let args = self.call_arguments()?;
                node = SyntaxNode::new(K::Call, Span::new(node.span.start, args.span.end), vec![node, args]);
            } else if self.at_op("[") {
                self.bump();
                let index = self.slices()?;
                let close = self.expect_op("]")?;
                node = SyntaxNode::new(K::Subscript, Span::new(node.span.start, close.span.end), vec![node, index]);
            } else {
                return Ok(node);
            }
        }
    }

    fn call_arguments(&mut self) -> PResult<SyntaxNode> {
        let start = self.expect_op("(")?.span.start;
        let mut items: Vec<SyntaxNode> = Vec::new();
        let mut seen_keyword = false;
        let mut seen_kw_unpack = false;
        while !self.at_op(")") {
            let t = self.tok();
            if t.is_op("*") {
                if seen_kw_unpack {
                    return self.err("iterable argument unpacking follows keyword argument unpacking");
                }
                self.bump();
                let value = self.expression()?;
                items.push(SyntaxNode::new(K::Starred, Span::new(t.span.start, value.span.end), vec![value]));
            } else if t.is_op("**") {
                self.bump();
                let value = self.expression()?;
                seen_kw_unpack = true;
                items.push(SyntaxNode::new(K::DoubleStarred, Span::new(t.span.start, value.span.end), vec![value]));
            } else if t.kind == T::Name && self.nth(1).is_op("=") {
                self.bump();
                self.bump();
                let value = self.expression()?;
                seen_keyword = true;
                items.push(
                    SyntaxNode::new(K::Keyword, Span::new(t.span.start, value.span.end), vec![value])
                        .with_name(t.text, t.span),
                );
            } else {
                let value = self.named_expression()?;
                if self.at_kw("for") || (self.at_kw("async") && self.nth(1).is_keyword("for")) {
                    let mut children = vec![value];
                    self.comp_clauses(&mut children)?;
                    let span = Span::new(children[0].span.start, self.prev_end());
                    let genexp = SyntaxNode::new(K::GeneratorExp, span, children);
                    let sole = items.is_empty() && (self.at_op(")") || (self.at_op(",") && self.nth(1).is_op(")")));
                    if !sole {
                        return Err(self.err_at(span.start, "Generator expression must be parenthesized"));
                    }
                    items.push(genexp);
                } else {
                    if self.at_op("=") {
                        return self.err("expression cannot contain assignment, perhaps you meant \"==\"?");
                    }
                    if seen_kw_unpack {
                        return Err(
                            self.err_at(value.span.start, "positional argument follows keyword argument unpacking")
                        );
                    }
                    if seen_keyword {
                        return Err(self.err_at(value.span.start, "positional argument follows keyword argument"));
                    }
                    items.push(value);
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        let close = self.expect_op(")")?;
        Ok(SyntaxNode::new(K::Arguments, Span::new(start, close.span.end), items))
    }

    fn slices(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        let first = self.slice()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op("]") {
                break;
            }
            items.push(self.slice()?);
        }
        Ok(SyntaxNode::new(K::Tuple, Span::new(start, self.prev_end()), items))
    }

    fn slice(&mut self) -> PResult<SyntaxNode> {
        let start = self.start();
        let mut children = Vec::new();
        if !self.at_op(":") {
            let e = self.named_expression()?;
            if !self.at_op(":") {
                return Ok(e);
            }
            children.push(e);
        }
        self.bump();
        if self.starts_expr() && !self.at_op("*") {
            children.push(self.expression()?);
        }
        if self.eat_op(":") && self.starts_expr() && !self.at_op("*") {
            children.push(self.expression()?);
        }
        Ok(SyntaxNode::new(K::Slice, Span::new(start, self.prev_end()), children))
    }

    fn comp_clauses(&mut self, out: &mut Vec<SyntaxNode>) -> PResult<()> {
        while self.at_kw("for") || (self.at_kw("async") && self.nth(1).is_keyword("for")) {
            let start = self.start();
            let is_async = self.eat_kw("async");
            self.bump();
            let target = self.star_targets()?;
            self.expect_kw("in")?;
            let iter = self.disjunction()?;
            let mut clause = SyntaxNode::new(K::CompFor, Span::new(start, iter.span.end), vec![target, iter]);
            if is_async {
                clause = clause.with_op("async");
            }
            out.push(clause);
            while self.at_kw("if") {
                let istart = self.bump().span.start;
                let cond = self.disjunction()?;
                out.push(SyntaxNode::new(K::CompIf, Span::new(istart, cond.span.end), vec![cond]));
            }
        }
        Ok(())
    }

    fn at_comp_for(&self) -> bool {
        self.at_kw("for") || (self.at_kw("async") && self.nth(1).is_keyword("for"))
    }

    fn strings(&mut self) -> PResult<SyntaxNode> {
        let first = self.bump();
        let is_bytes = |t: &Token| {
            let prefix_len = t.text.find(['\'', '"']).unwrap_or(0);
            t.text[..prefix_len].contains(['b', 'B'])
        };
        let bytes = is_bytes(&first);
        self.check_literal(first)?;
        let mut end = first.span.end;
        while self.at_kind(T::String) {
            let t = self.bump();
            if is_bytes(&t) != bytes {
                return Err(self.err_at(first.span.start, "cannot mix bytes and nonbytes literals"));
            }
            self.check_literal(t)?;
            end = t.span.end;
        }
        Ok(SyntaxNode::new(K::String, Span::new(first.span.start, end), Vec::new()))
    }

    /// Rejects malformed escapes and non-ASCII bytes literals.
    fn check_literal(&self, t: Token<'a>) -> PResult<()> {
        let quote_at = t.text.find(['\'', '"']).unwrap_or(0);
        let prefix = t.text[..quote_at].to_ascii_lowercase();
        let bytes = prefix.contains('b');
        let body = &t.text[quote_at..];
        if bytes && !body.is_ascii() {
            return Err(self.err_at(t.span.start, "bytes can only contain ASCII literal characters"));
        }
        if prefix.contains('f') {
            let q = if body.starts_with("'''") || body.starts_with("\"\"\"") { 3 } else { 1 };
            let inner = &body[q..body.len() - q];
            check_fstring(inner).map_err(|(off, msg)| self.err_at(t.span.start + quote_at + q + off, msg))?;
        }
        if prefix.contains('r') {
            return Ok(());
        }
        let b = body.as_bytes();
        let mut i = 0;
        while i < b.len() {
            if b[i] != b'\\' {
                i += 1;
                continue;
            }
            let hex_run = |n: usize| b.len() >= i + 2 + n && b[i + 2..i + 2 + n].iter().all(u8::is_ascii_hexdigit);
            let ok = match b.get(i + 1) {
                Some(b'x') => hex_run(2),
                Some(b'u') if !bytes => hex_run(4),
                Some(b'U') if !bytes => {
                    hex_run(8) && u32::from_str_radix(&body[i + 2..i + 10], 16).is_ok_and(|c| c <= 0x10FFFF)
                }
                Some(b'N') if !bytes => b.get(i + 2) == Some(&b'{') && body[i + 3..].find('}').is_some_and(|p| p > 0),
                _ => true,
            };
            if !ok {
                return Err(self.err_at(t.span.start + quote_at + i, "invalid escape sequence in literal"));
            }
            i += 2;
        }
        Ok(())
    }

    fn yield_expr(&mut self) -> PResult<SyntaxNode> {
        let start = self.expect_kw("yield")?.span.start;
        if self.eat_kw("from") {
            let value = self.expression()?;
            return Ok(SyntaxNode::new(K::YieldFrom, Span::new(start, value.span.end), vec![value]));
        }
        let children = if self.starts_expr() { vec![self.star_expressions()?] } else { Vec::new() };
        Ok(SyntaxNode::new(K::Yield, Span::new(start, self.prev_end()), children))
    }

    fn atom(&mut self) -> PResult<SyntaxNode> {
        let t = self.tok();
        match t.kind {
            T::Name => {
                self.bump();
                Ok(self.name_node(t))
            }
            T::Number => {
                self.bump();
                Ok(SyntaxNode::new(K::Number, t.span, Vec::new()))
            }
            T::String => self.strings(),
            T::Keyword if matches!(t.text, "True" | "False" | "None") => {
                self.bump();
                Ok(SyntaxNode::named(K::Constant, t.span, t.text, t.span))
            }
            T::Op => match t.text {
                "..." => {
                    self.bump();
                    Ok(SyntaxNode::new(K::Ellipsis, t.span, Vec::new()))
                }
                "(" => self.paren_atom(),
                "[" => self.list_atom(),
                "{" => self.brace_atom(),
                _ => self.unexpected(),
            },
            _ => self.unexpected(),
        }
    }

    fn paren_atom(&mut self) -> PResult<SyntaxNode> {
        let start = self.bump().span.start;
        if self.at_op(")") {
            let end = self.bump().span.end;
            return Ok(SyntaxNode::new(K::Tuple, Span::new(start, end), Vec::new()));
        }
        if self.at_kw("yield") {
            let mut inner = self.yield_expr()?;
            inner.span = Span::new(start, self.expect_op(")")?.span.end);
            return Ok(inner);
        }
        let first = self.star_named_expression()?;
        if self.at_comp_for() {
            if first.kind == K::Starred {
                return Err(self.err_at(first.span.start, "iterable unpacking cannot be used in comprehension"));
            }
            let mut children = vec![first];
            self.comp_clauses(&mut children)?;
            let end = self.expect_op(")")?.span.end;
            return Ok(SyntaxNode::new(K::GeneratorExp, Span::new(start, end), children));
        }
        if self.at_op(",") {
            let mut items = vec![first];
            while self.eat_op(",") {
                if self.at_op(")") {
                    break;
                }
                items.push(self.star_named_expression()?);
            }
            let end = self.expect_op(")")?.span.end;
            return Ok(SyntaxNode::new(K::Tuple, Span::new(start, end), items));
        }
        let end = self.expect_op(")")?.span.end;
        if first.kind == K::Starred {
            return Err(self.err_at(first.span.start, "cannot use starred expression here"));
        }
        // The node covers its parentheses so that enclosing spans do too.
        let mut first = first;
        first.span = Span::new(start, end);
        Ok(first)
    }

    fn list_atom(&mut self) -> PResult<SyntaxNode> {
        let start = self.bump().span.start;
        let mut items = Vec::new();
        if !self.at_op("]") {
            let first = self.star_named_expression()?;
            if self.at_comp_for() {
                if first.kind == K::Starred {
                    return Err(self.err_at(first.span.start, "iterable unpacking cannot be used in comprehension"));
                }
                let mut children = vec![first];
                self.comp_clauses(&mut children)?;
                let end = self.expect_op("]")?.span.end;
                return Ok(SyntaxNode::new(K::ListComp, Span::new(start, end), children));
            }
            items.push(first);
            while self.eat_op(",") {
                if self.at_op("]") {
                    break;
                }
                items.push(self.star_named_expression()?);
            }
        }
        let end = self.expect_op("]")?.span.end;
        Ok(SyntaxNode::new(K::List, Span::new(start, end), items))
    }

    fn dict_item(&mut self) -> PResult<SyntaxNode> {
        if self.at_op("**") {
            let start = self.bump().span.start;
            let value = self.bitwise_or()?;
            return Ok(SyntaxNode::new(K::DoubleStarred, Span::new(start, value.span.end), vec![value]));
        }
        let key = self.expression()?;
        self.expect_op(":")?;
        let value = self.expression()?;
        Ok(SyntaxNode::new(K::DictEntry, Span::new(key.span.start, value.span.end), vec![key, value]))
    }

    fn brace_atom(&mut self) -> PResult<SyntaxNode> {
        let start = self.bump().span.start;
        if self.at_op("}") {
            let end = self.bump().span.end;
            return Ok(SyntaxNode::new(K::Dict, Span::new(start, end), Vec::new()));
        }
        let is_dict;
        let first = if self.at_op("**") {
            is_dict = true;
            self.dict_item()?
        } else {
            let first = self.star_named_expression()?;
            if self.at_op(":") && !matches!(first.kind, K::Starred | K::NamedExpr) {
                is_dict = true;
                self.bump();
                let value = self.expression()?;
                SyntaxNode::new(K::DictEntry, Span::new(first.span.start, value.span.end), vec![first, value])
            } else {
                is_dict = false;
                first
            }
        };
        if self.at_comp_for() {
            if matches!(first.kind, K::Starred | K::DoubleStarred) {
                return Err(self.err_at(first.span.start, "iterable unpacking cannot be used in comprehension"));
            }
            let mut children = vec![first];
            self.comp_clauses(&mut children)?;
            let end = self.expect_op("}")?.span.end;
            let kind = if is_dict { K::DictComp } else { K::SetComp };
            return Ok(SyntaxNode::new(kind, Span::new(start, end), children));
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op("}") {
                break;
            }
            items.push(if is_dict { self.dict_item()? } else { self.star_named_expression()? });
        }
        let end = self.expect_op("}")?.span.end;
        let kind = if is_dict { K::Dict } else { K::Set };
        Ok(SyntaxNode::new(kind, Span::new(start, end), items))
    }
}

type FieldResult = Result<usize, (usize, &'static str)>;

/// Validates the replacement fields of an f-string body (quotes removed).
fn check_fstring(body: &str) -> Result<(), (usize, &'static str)> {
    let b = body.as_bytes();
    let mut i = 0;
    while i < b.len() {
        match b[i] {
            b'{' if b.get(i + 1) == Some(&b'{') => i += 2,
            b'}' if b.get(i + 1) == Some(&b'}') => i += 2,
            b'}' => return Err((i, "f-string: single '}' is not allowed")),
            b'{' => i = check_field(body, i + 1)?,
            _ => i += 1,
        }
    }
    Ok(())
}

fn check_field(body: &str, start: usize) -> FieldResult {
    let b = body.as_bytes();
    let mut depth = 0usize;
    let mut i = start;
    loop {
        let Some(&c) = b.get(i) else {
            return Err((i, "f-string: expecting '}'"));
        };
        match c {
            b'\'' | b'"' => match body[i + 1..].find(c as char) {
                Some(p) => i += p + 1,
                None => return Err((i, "f-string: unterminated string")),
            },
            b'(' | b'[' | b'{' => depth += 1,
            b')' | b']' | b'}' if depth > 0 => depth -= 1,
            b')' | b']' => return Err((i, "f-string: unmatched bracket")),
            b'}' | b':' if depth == 0 => break,
            b'!' if depth == 0 && b.get(i + 1) != Some(&b'=') => break,
            b'#' => return Err((i, "f-string expression part cannot include '#'")),
            b'\\' => return Err((i, "f-string expression part cannot include a backslash")),
            _ => {}
        }
        i += 1;
    }
    let mut expr = body[start..i].trim_end();
    if let Some(stripped) = expr.strip_suffix('=') {
        if !stripped.ends_with(['=', '!', '<', '>']) {
            expr = stripped;
        }
    }
    if expr.trim().is_empty() {
        return Err((start, "f-string: empty expression not allowed"));
    }
    if parse(&format!("({expr})")).is_err() {
        return Err((start, "f-string: invalid syntax"));
    }
    if b[i] == b'!' {
        if !matches!(b.get(i + 1), Some(b's' | b'r' | b'a')) {
            return Err((i, "f-string: invalid conversion character"));
        }
        i += 2;
        if !matches!(b.get(i), Some(b':' | b'}')) {
            return Err((i, "f-string: expecting '}'"));
        }
    }
    if b[i] == b':' {
        i += 1;
        loop {
            match b.get(i) {
                None => return Err((i, "f-string: expecting '}'")),
                Some(b'{') => i = check_field(body, i + 1)?,
                Some(b'}') => break,
                Some(_) => i += 1,
            }
        }
    }
    Ok(i + 1)
}
