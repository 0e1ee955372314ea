//! Full-fidelity Python 3 tokenizer.
//!
//! Every token carries the exact byte span it came from. Synthetic tokens
//! (DEDENT, the end-of-file NEWLINE when the source lacks a trailing line
//! break, and EOF) are zero-width, so the gaps between non-synthetic tokens
//! plus their texts always reproduce the input byte for byte.

use serde::Serialize;
use thiserror::Error;

use super::Span;

/// Python 3 hard keywords. Soft keywords (`match`, `case`, `_`) lex as names.
pub const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del",
    "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal",
    "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.binary_search(&word).is_ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TokenKind {
    Name,
    Keyword,
    Number,
    String,
    Comment,
    Op,
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    pub span: Span,
}

impl Token<'_> {
    /// Zero-width tokens inserted by the tokenizer rather than read from the source.
    pub fn is_synthetic(&self) -> bool {
        self.span.is_empty()
    }

    pub fn is_op(&self, op: &str) -> bool {
        self.kind == TokenKind::Op && self.text == op
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        self.kind == TokenKind::Keyword && self.text == kw
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at byte {offset}")]
pub struct LexError {
    pub offset: usize,
    pub message: String,
}

const THREE_CHAR_OPS: &[&str] = &["**=", "//=", ">>=", "<<=", "..."];
const TWO_CHAR_OPS: &[&str] =
    &["->", ":=", "**", "//", "<<", ">>", "<=", ">=", "==", "!=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@="];
const ONE_CHAR_OPS: &[u8] = b"+-*/%@&|^~<>()[]{},:;.=";

const TAB_SIZE: usize = 8;

/// Tokenizes `source`, failing on the first lexical error.
pub fn tokenize(source: &str) -> Result<Vec<Token<'_>>, LexError> {
    Lexer::new(source).run()
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    tokens: Vec<Token<'a>>,
    indents: Vec<usize>,
    brackets: Vec<(u8, usize)>,
    at_line_start: bool,
    line_has_content: bool,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        let pos = if src.starts_with('\u{feff}') { 3 } else { 0 };
        Self {
            src,
            bytes: src.as_bytes(),
            pos,
            tokens: Vec::new(),
            indents: vec![0],
            brackets: Vec::new(),
            at_line_start: true,
            line_has_content: false,
        }
    }

    fn error<T>(&self, offset: usize, message: impl Into<String>) -> Result<T, LexError> {
        Err(LexError { offset, message: message.into() })
    }

    fn push(&mut self, kind: TokenKind, start: usize, end: usize) {
        if !matches!(kind, TokenKind::Comment | TokenKind::Newline) {
            self.line_has_content = true;
        }
        self.tokens.push(Token { kind, text: &self.src[start..end], span: Span::new(start, end) });
    }

    fn peek(&self, ahead: usize) -> Option<u8> {
        self.bytes.get(self.pos + ahead).copied()
    }

    fn newline_len(&self, at: usize) -> usize {
        match self.bytes.get(at) {
            Some(b'\n') => 1,
            Some(b'\r') if self.bytes.get(at + 1) == Some(&b'\n') => 2,
            Some(b'\r') => 1,
            _ => 0,
        }
    }

    fn run(mut self) -> Result<Vec<Token<'a>>, LexError> {
        loop {
            if self.at_line_start && self.brackets.is_empty() {
                self.at_line_start = false;
                if !self.indentation()? {
                    break;
                }
            }
            while matches!(self.peek(0), Some(b' ' | b'\t' | b'\x0c')) {
                self.pos += 1;
            }
            let Some(c) = self.peek(0) else { break };
            match c {
                b'#' => self.comment(),
                b'\\' => {
                    let nl = self.newline_len(self.pos + 1);
                    if nl == 0 {
                        if self.pos + 1 >= self.bytes.len() {
                            return self.error(self.pos, "unexpected EOF after line continuation");
                        }
                        return self.error(self.pos, "unexpected character after line continuation character");
                    }
                    self.pos += 1 + nl;
                    if self.pos >= self.bytes.len() {
                        return self.error(self.pos, "unexpected EOF after line continuation");
                    }
                }
                b'\n' | b'\r' => {
                    let nl = self.newline_len(self.pos);
                    if self.brackets.is_empty() {
                        self.push(TokenKind::Newline, self.pos, self.pos + nl);
                        self.line_has_content = false;
                        self.at_line_start = true;
                    }
                    self.pos += nl;
                }
                b'0'..=b'9' => self.number()?,
                b'.' if matches!(self.peek(1), Some(b'0'..=b'9')) => self.number()?,
                b'"' | b'\'' => self.string(self.pos)?,
                _ if is_ident_start_byte(c) => self.identifier()?,
                _ => self.operator()?,
            }
        }
        let end = self.bytes.len();
        if let Some(&(open, at)) = self.brackets.last() {
            return self.error(at, format!("'{}' was never closed", open as char));
        }
        if self.line_has_content {
            self.push(TokenKind::Newline, end, end);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(TokenKind::Dedent, end, end);
        }
        self.push(TokenKind::Eof, end, end);
        Ok(self.tokens)
    }

    /// Consumes blank and comment-only lines, then emits INDENT/DEDENT for the
    /// next logical line. Returns false at end of input.
    fn indentation(&mut self) -> Result<bool, LexError> {
        loop {
            let line_start = self.pos;
            let mut col = 0usize;
            while let Some(c) = self.peek(0) {
                match c {
                    b' ' => col += 1,
                    b'\t' => col = (col / TAB_SIZE + 1) * TAB_SIZE,
                    b'\x0c' => col = 0,
                    _ => break,
                }
                self.pos += 1;
            }
            let Some(c) = self.peek(0) else { return Ok(false) };
            match c {
                b'#' => {
                    self.comment();
                    let nl = self.newline_len(self.pos);
                    self.pos += nl;
                    continue;
                }
                b'\n' | b'\r' => {
                    self.pos += self.newline_len(self.pos);
                    continue;
                }
                _ => {}
            }
            let top = *self.indents.last().expect("indent stack never empty");
            if col > top {
                self.indents.push(col);
                self.push(TokenKind::Indent, line_start, self.pos);
            } else if col < top {
                while col < *self.indents.last().expect("indent stack never empty") {
                    self.indents.pop();
                    self.push(TokenKind::Dedent, self.pos, self.pos);
                }
                if col != *self.indents.last().expect("indent stack never empty") {
                    return self.error(self.pos, "unindent does not match any outer indentation level");
                }
            }
            return Ok(true);
        }
    }

    fn comment(&mut self) {
        let start = self.pos;
        while !matches!(self.peek(0), None | Some(b'\n' | b'\r')) {
            self.pos += 1;
        }
        self.push(TokenKind::Comment, start, self.pos);
    }

    fn identifier(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        let mut first = true;
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c.is_ascii() {
                if c.is_ascii_alphanumeric() || c == b'_' {
                    if first && c.is_ascii_digit() {
                        break;
                    }
                    self.pos += 1;
                } else {
                    break;
                }
            } else {
                let ch = self.src[self.pos..].chars().next().expect("in bounds");
                let ok = if first { unicode_ident::is_xid_start(ch) } else { unicode_ident::is_xid_continue(ch) };
                if !ok {
                    if first {
                        return self.error(self.pos, format!("invalid character '{ch}'"));
                    }
                    break;
                }
                self.pos += ch.len_utf8();
            }
            first = false;
        }
        let word = &self.src[start..self.pos];
        if matches!(self.peek(0), Some(b'"' | b'\'')) && is_string_prefix(word) {
            return self.string(start);
        }
        let kind = if is_keyword(word) { TokenKind::Keyword } else { TokenKind::Name };
        self.push(kind, start, self.pos);
        Ok(())
    }

    fn string(&mut self, start: usize) -> Result<(), LexError> {
        let quote = self.bytes[self.pos];
        let triple = self.peek(1) == Some(quote) && self.peek(2) == Some(quote);
        self.pos += if triple { 3 } else { 1 };
        loop {
            let Some(c) = self.peek(0) else {
                let what =
                    if triple { "unterminated triple-quoted string literal" } else { "unterminated string literal" };
                return self.error(start, what);
            };
            match c {
                b'\\' => {
                    self.pos += 1;
                    let nl = self.newline_len(self.pos);
                    self.pos += if nl > 0 { nl } else { usize::from(self.pos < self.bytes.len()) };
                }
                _ if c == quote => {
                    if !triple {
                        self.pos += 1;
                        break;
                    }
                    if self.peek(1) == Some(quote) && self.peek(2) == Some(quote) {
                        self.pos += 3;
                        break;
                    }
                    self.pos += 1;
                }
                b'\n' | b'\r' if !triple => {
                    return self.error(start, "unterminated string literal");
                }
                _ => self.pos += 1,
            }
        }
        self.push(TokenKind::String, start, self.pos);
        Ok(())
    }

    fn digits(&mut self, valid: fn(u8) -> bool) -> Result<usize, LexError> {
        let mut count = 0;
        loop {
            match self.peek(0) {
                Some(c) if valid(c) => {
                    self.pos += 1;
                    count += 1;
                }
                Some(b'_') if count > 0 => {
                    if !self.peek(1).is_some_and(valid) {
                        return self.error(self.pos, "invalid number literal");
                    }
                    self.pos += 1;
                }
                _ => return Ok(count),
            }
        }
    }

    fn number(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        if self.peek(0) == Some(b'0') {
            let radix: Option<fn(u8) -> bool> = match self.peek(1) {
                Some(b'x' | b'X') => Some(|c: u8| c.is_ascii_hexdigit()),
                Some(b'o' | b'O') => Some(|c: u8| (b'0'..=b'7').contains(&c)),
                Some(b'b' | b'B') => Some(|c: u8| c == b'0' || c == b'1'),
                _ => None,
            };
            if let Some(valid) = radix {
                self.pos += 2;
                if self.peek(0) == Some(b'_') {
                    self.pos += 1;
                }
                if self.digits(valid)? == 0 {
                    return self.error(start, "invalid number literal");
                }
                self.push(TokenKind::Number, start, self.pos);
                return Ok(());
            }
        }
        let is_digit = |c: u8| c.is_ascii_digit();
        let int_digits = self.digits(is_digit)?;
        let int_end = self.pos;
        let mut is_float = false;
        if self.peek(0) == Some(b'.') {
            is_float = true;
            self.pos += 1;
            self.digits(is_digit)?;
        }
        if matches!(self.peek(0), Some(b'e' | b'E')) {
            let sign = usize::from(matches!(self.peek(1), Some(b'+' | b'-')));
            if self.peek(1 + sign).is_some_and(is_digit) {
                is_float = true;
                self.pos += 1 + sign;
                self.digits(is_digit)?;
            }
        }
        let imaginary = matches!(self.peek(0), Some(b'j' | b'J'));
        if imaginary {
            self.pos += 1;
        }
        if !is_float && !imaginary && int_digits > 1 {
            let text = &self.src[start..int_end];
            if text.starts_with('0') && text.bytes().any(|c| c != b'0' && c != b'_') {
                return self.error(start, "leading zeros in decimal integer literals are not permitted");
            }
        }
        self.push(TokenKind::Number, start, self.pos);
        Ok(())
    }

    fn operator(&mut self) -> Result<(), LexError> {
        let rest = &self.bytes[self.pos..];
        let len = if THREE_CHAR_OPS.iter().any(|op| rest.starts_with(op.as_bytes())) {
            3
        } else if TWO_CHAR_OPS.iter().any(|op| rest.starts_with(op.as_bytes())) {
            2
        } else if ONE_CHAR_OPS.contains(&rest[0]) {
            1
        } else {
            let ch = self.src[self.pos..].chars().next().expect("in bounds");
            return self.error(self.pos, format!("invalid character '{ch}'"));
        };
        let c = rest[0];
        match c {
            b'(' | b'[' | b'{' => self.brackets.push((c, self.pos)),
            b')' | b']' | b'}' => {
                let expected = match c {
                    b')' => b'(',
                    b']' => b'[',
                    _ => b'{',
                };
                match self.brackets.pop() {
                    Some((open, _)) if open == expected => {}
                    Some((open, _)) => {
                        return self.error(
                            self.pos,
                            format!(
                                "closing parenthesis '{}' does not match opening parenthesis '{}'",
                                c as char, open as char
                            ),
                        )
                    }
                    None => return self.error(self.pos, format!("unmatched '{}'", c as char)),
                }
            }
            _ => {}
        }
        self.push(TokenKind::Op, self.pos, self.pos + len);
        self.pos += len;
        Ok(())
    }
}

fn is_ident_start_byte(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_' || !c.is_ascii()
}

fn is_string_prefix(word: &str) -> bool {
    matches!(word.to_ascii_lowercase().as_str(), "r" | "u" | "b" | "br" | "rb" | "f" | "fr" | "rf")
}
