use super::timespan::TimeUnit;
use super::token::{is_keyword, FileId, Span, Token, TokenKind};
use crate::diag::Diagnostic;

const OPERATORS: &[&str] = &[
    "==", "!=", "<=", ">=", "&&", "||", "<<", ">>", "++", "--", "+=", "-=", "*=", "/=", "%=",
    "+", "-", "*", "/", "%", "<", ">", "=", "!", "&", "|", "^", "~", "?",
];
const PUNCTUATION: &[char] = &['(', ')', '{', '}', '[', ']', ',', ';', ':', '.', '@', '#'];

struct Lexer<'a> {
    src: &'a str,
    file: FileId,
    pos: usize,
    line: u32,
    col: u32,
    tokens: Vec<Token>,
}

/// Splits `source` into tokens, skipping whitespace and `//` comments.
pub fn tokenize(source: &str, file: FileId) -> Result<Vec<Token>, Diagnostic> {
    let mut lx = Lexer {
        src: source,
        file,
        pos: 0,
        line: 1,
        col: 1,
        tokens: Vec::new(),
    };
    lx.run()?;
    Ok(lx.tokens)
}

impl<'a> Lexer<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.rest().chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span_from(&self, start: usize, line: u32, col: u32) -> Span {
        Span::new(self.file, start, self.pos - start, line, col)
    }

    fn error_at(&self, start: usize, line: u32, col: u32, msg: impl Into<String>) -> Diagnostic {
        let len = (self.pos - start).max(1);
        Diagnostic::error(Span::new(self.file, start, len, line, col), "lex", msg)
    }

    fn push(&mut self, kind: TokenKind, start: usize, line: u32, col: u32) {
        let span = self.span_from(start, line, col);
        self.tokens.push(Token {
            kind,
            lexeme: self.src[start..self.pos].to_string(),
            span,
        });
    }

    fn run(&mut self) -> Result<(), Diagnostic> {
        while let Some(c) = self.peek() {
            let (start, line, col) = (self.pos, self.line, self.col);
            if c.is_whitespace() {
                self.bump();
            } else if self.rest().starts_with("//") {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if self.rest().starts_with("/*") {
                self.bump();
                self.bump();
                return Err(self.error_at(
                    start,
                    line,
                    col,
                    "block comments are not supported; use `//`",
                ));
            } else if self.rest().starts_with("{=") {
                self.annotation_body(start, line, col)?;
            } else if c.is_ascii_alphabetic() || c == '_' {
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                    self.bump();
                }
                let kind = if is_keyword(&self.src[start..self.pos]) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Identifier
                };
                self.push(kind, start, line, col);
            } else if c.is_ascii_digit() {
                self.number(start, line, col)?;
            } else if c == '"' {
                self.string(start, line, col)?;
            } else if c == '\'' {
                self.char_lit(start, line, col)?;
            } else if let Some(op) = OPERATORS.iter().find(|op| self.rest().starts_with(**op)) {
                for _ in 0..op.len() {
                    self.bump();
                }
                self.push(TokenKind::Operator, start, line, col);
            } else if PUNCTUATION.contains(&c) {
                self.bump();
                self.push(TokenKind::Punctuation, start, line, col);
            } else {
                self.bump();
                return Err(self.error_at(start, line, col, format!("unknown character `{c}`")));
            }
        }
        Ok(())
    }

    fn annotation_body(&mut self, start: usize, line: u32, col: u32) -> Result<(), Diagnostic> {
        self.bump();
        self.bump();
        loop {
            if self.rest().starts_with("=}") {
                self.bump();
                self.bump();
                self.push(TokenKind::AnnotationBody, start, line, col);
                return Ok(());
            }
            if self.bump().is_none() {
                return Err(self.error_at(start, line, col, "unterminated annotation body `{=`"));
            }
        }
    }

    fn digits(&mut self) -> usize {
        let mut n = 0;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
            n += 1;
        }
        n
    }

    /// Digits with an optional fraction. Returns whether a fraction was read.
    fn decimal_part(&mut self) -> bool {
        self.digits();
        if self.peek() == Some('.') && matches!(self.peek_at(1), Some(c) if c.is_ascii_digit()) {
            self.bump();
            self.digits();
            true
        } else {
            false
        }
    }

    fn number(&mut self, start: usize, line: u32, col: u32) -> Result<(), Diagnostic> {
        let mut is_decimal = self.decimal_part();
        if TimeUnit::match_prefix(self.rest()).is_some() && !self.starts_exponent() {
            return self.timespan_tail(start, line, col);
        }
        if self.starts_exponent() {
            self.bump();
            if matches!(self.peek(), Some('+') | Some('-')) {
                self.bump();
            }
            self.digits();
            is_decimal = true;
        }
        if matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                self.bump();
            }
            return Err(self.error_at(start, line, col, "malformed number"));
        }
        let kind = if is_decimal {
            TokenKind::DecimalLiteral
        } else {
            TokenKind::IntegerLiteral
        };
        self.push(kind, start, line, col);
        Ok(())
    }

    fn starts_exponent(&self) -> bool {
        let mut it = self.rest().chars();
        match it.next() {
            Some('e') | Some('E') => {}
            _ => return false,
        }
        match it.next() {
            Some(c) if c.is_ascii_digit() => true,
            Some('+') | Some('-') => matches!(it.next(), Some(c) if c.is_ascii_digit()),
            _ => false,
        }
    }

    /// Continues a timespan literal after its first magnitude.
    fn timespan_tail(&mut self, start: usize, line: u32, col: u32) -> Result<(), Diagnostic> {
        loop {
            let unit = match TimeUnit::match_prefix(self.rest()) {
                Some(u) => u,
                None => {
                    while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_' || c == '.')
                    {
                        self.bump();
                    }
                    return Err(self.error_at(start, line, col, "malformed number"));
                }
            };
            for _ in 0..unit.suffix().len() {
                self.bump();
            }
            match self.peek() {
                Some(c) if c.is_ascii_digit() => {
                    self.decimal_part();
                }
                Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                    while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                        self.bump();
                    }
                    return Err(self.error_at(start, line, col, "malformed number"));
                }
                _ => break,
            }
        }
        self.push(TokenKind::TimespanLiteral, start, line, col);
        Ok(())
    }

    fn string(&mut self, start: usize, line: u32, col: u32) -> Result<(), Diagnostic> {
        self.bump();
        loop {
            match self.peek() {
                None | Some('\n') => {
                    return Err(Diagnostic::error(
                        Span::new(self.file, start, 1, line, col),
                        "lex",
                        "unterminated string literal",
                    ));
                }
                Some('\\') => {
                    self.bump();
                    self.bump();
                }
                Some('"') => {
                    self.bump();
                    break;
                }
                Some(_) => {
                    self.bump();
                }
            }
        }
        self.push(TokenKind::StringLiteral, start, line, col);
        Ok(())
    }

    fn char_lit(&mut self, start: usize, line: u32, col: u32) -> Result<(), Diagnostic> {
        self.bump();
        match self.peek() {
            Some('\\') => {
                self.bump();
                self.bump();
            }
            Some('\'') | Some('\n') | None => {
                return Err(self.error_at(start, line, col, "empty or unterminated char literal"));
            }
            Some(_) => {
                self.bump();
            }
        }
        if self.peek() != Some('\'') {
            return Err(self.error_at(start, line, col, "unterminated char literal"));
        }
        self.bump();
        self.push(TokenKind::CharLiteral, start, line, col);
        Ok(())
    }
}

/// Decodes backslash escapes in the body of a string or char literal.
pub fn unescape(body: &str) -> Result<String, String> {
    let mut out = String::with_capacity(body.len());
    let mut chars = body.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some('0') => out.push('\0'),
            Some('\\') => out.push('\\'),
            Some('"') => out.push('"'),
            Some('\'') => out.push('\''),
            Some('$') => out.push('$'),
            Some(other) => return Err(format!("unknown escape `\\{other}`")),
            None => return Err("dangling backslash".into()),
        }
    }
    Ok(out)
}
