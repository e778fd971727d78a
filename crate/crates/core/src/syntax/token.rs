use serde::Serialize;
use std::fmt;

/// Index of a source file inside a [`SourceMap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Default)]
pub struct FileId(pub u32);

/// A byte range in one source file, with the 1-based line/column of its start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Default)]
pub struct Span {
    pub file: FileId,
    pub offset: u32,
    pub len: u32,
    pub line: u32,
    pub column: u32,
}

impl Span {
    pub fn new(file: FileId, offset: usize, len: usize, line: u32, column: u32) -> Self {
        Span {
            file,
            offset: offset as u32,
            len: len as u32,
            line,
            column,
        }
    }

    pub fn end(&self) -> u32 {
        self.offset + self.len
    }

    /// Smallest span covering both `self` and `other` (same file assumed).
    pub fn to(&self, other: Span) -> Span {
        if other.file != self.file || other.end() < self.offset {
            return *self;
        }
        Span {
            len: other.end().max(self.end()) - self.offset,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenKind {
    Identifier,
    Keyword,
    IntegerLiteral,
    DecimalLiteral,
    StringLiteral,
    CharLiteral,
    TimespanLiteral,
    Operator,
    Punctuation,
    /// Raw `{= ... =}` annotation body.
    AnnotationBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub span: Span,
}

impl Token {
    pub fn is(&self, kind: TokenKind, lexeme: &str) -> bool {
        self.kind == kind && self.lexeme == lexeme
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        self.is(TokenKind::Keyword, kw)
    }

    /// Operator or punctuation with the given spelling.
    pub fn is_sym(&self, sym: &str) -> bool {
        matches!(self.kind, TokenKind::Operator | TokenKind::Punctuation) && self.lexeme == sym
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TokenKind::Identifier => write!(f, "identifier `{}`", self.lexeme),
            TokenKind::Keyword => write!(f, "keyword `{}`", self.lexeme),
            _ => write!(f, "`{}`", self.lexeme),
        }
    }
}

pub const KEYWORDS: &[&str] = &[
    "include", "const", "var", "def", "function", "external", "main", "do", "every", "on",
    "return", "if", "else", "cases", "case", "otherwise", "while", "foreach", "in", "break",
    "cancel", "with", "self", "true", "false", "null", "any", "bool", "char", "string",
    "timespan", "int8", "int16", "int32", "int64", "uint8", "uint16", "uint32", "uint64",
    "float", "double", "array", "list", "set", "map", "tuple", "record", "class", "enum",
    "object", "actor", "connection", "extends", "as", "library", "use",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

/// A loaded source file.
#[derive(Debug, Clone)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
}

/// All files participating in one compilation, addressed by [`FileId`].
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    files: Vec<SourceFile>,
}

impl SourceMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, path: impl Into<String>, text: impl Into<String>) -> FileId {
        self.files.push(SourceFile {
            path: path.into(),
            text: text.into(),
        });
        FileId(self.files.len() as u32 - 1)
    }

    pub fn get(&self, id: FileId) -> Option<&SourceFile> {
        self.files.get(id.0 as usize)
    }

    pub fn path(&self, id: FileId) -> &str {
        self.get(id).map(|f| f.path.as_str()).unwrap_or("<unknown>")
    }

    pub fn files(&self) -> &[SourceFile] {
        &self.files
    }
}
