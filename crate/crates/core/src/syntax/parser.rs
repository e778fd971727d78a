//! Recursive-descent parser with precedence climbing for expressions.

use super::ast::*;
use super::lexer::{tokenize, unescape};
use super::timespan::parse_timespan;
use super::token::{FileId, Span, Token, TokenKind};
use crate::diag::Diagnostic;

type PResult<T> = Result<T, Diagnostic>;

pub struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    file: FileId,
    eof_span: Span,
    errors: Vec<Diagnostic>,
}

/// Lexes and parses one source file.
pub fn parse_source(source: &str, file: FileId) -> (Program, Vec<Diagnostic>) {
    match tokenize(source, file) {
        Ok(tokens) => parse(tokens, file, source),
        Err(e) => (Program::default(), vec![e]),
    }
}

/// Parses a token list into a program. `source` is only used to place the
/// end-of-file span.
pub fn parse(tokens: Vec<Token>, file: FileId, source: &str) -> (Program, Vec<Diagnostic>) {
    let (line, column) = end_position(source);
    let mut p = Parser {
        tokens,
        pos: 0,
        file,
        eof_span: Span::new(file, source.len(), 0, line, column),
        errors: Vec::new(),
    };
    let program = p.program();
    (program, p.errors)
}

/// Parses a standalone expression (used for CLI values such as `--max-time`).
pub fn parse_expression(source: &str, file: FileId) -> Result<Expr, Diagnostic> {
    let tokens = tokenize(source, file)?;
    let (line, column) = end_position(source);
    let mut p = Parser {
        tokens,
        pos: 0,
        file,
        eof_span: Span::new(file, source.len(), 0, line, column),
        errors: Vec::new(),
    };
    let e = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(Diagnostic::error(
            t.span,
            "syntax",
            format!("unexpected {t} after expression"),
        ));
    }
    Ok(e)
}

fn end_position(source: &str) -> (u32, u32) {
    let mut line = 1;
    let mut col = 1;
    for c in source.chars() {
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&Token> {
        self.tokens.get(self.pos + n)
    }

    fn at_sym(&self, sym: &str) -> bool {
        self.peek().is_some_and(|t| t.is_sym(sym))
    }

    fn at_sym_n(&self, n: usize, sym: &str) -> bool {
        self.peek_at(n).is_some_and(|t| t.is_sym(sym))
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(kw))
    }

    fn at_kind(&self, kind: TokenKind) -> bool {
        self.peek().is_some_and(|t| t.kind == kind)
    }

    fn current_span(&self) -> Span {
        self.peek().map(|t| t.span).unwrap_or(self.eof_span)
    }

    fn prev_span(&self) -> Span {
        if self.pos == 0 {
            return self.current_span();
        }
        self.tokens[self.pos - 1].span
    }

    fn span_from(&self, start: Span) -> Span {
        start.to(self.prev_span())
    }

    fn advance(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, expected: &str) -> Diagnostic {
        let found = match self.peek() {
            Some(t) => t.to_string(),
            None => "end of file".to_string(),
        };
        Diagnostic::error(
            self.current_span(),
            "syntax",
            format!("expected {expected}, found {found}"),
        )
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if self.at_sym(sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, sym: &str) -> PResult<Span> {
        if self.at_sym(sym) {
            Ok(self.advance().unwrap().span)
        } else {
            Err(self.error_here(&format!("`{sym}`")))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Span> {
        if self.at_kw(kw) {
            Ok(self.advance().unwrap().span)
        } else {
            Err(self.error_here(&format!("`{kw}`")))
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        if self.at_kind(TokenKind::Identifier) {
            let t = self.advance().unwrap();
            Ok(Ident::new(t.lexeme, t.span))
        } else {
            Err(self.error_here("identifier"))
        }
    }

    /// Identifier or a keyword used in a name position (`self!stop`, `string.format`).
    fn name_like(&mut self) -> PResult<Ident> {
        if self.at_kind(TokenKind::Identifier) || self.at_kind(TokenKind::Keyword) {
            let t = self.advance().unwrap();
            Ok(Ident::new(t.lexeme, t.span))
        } else {
            Err(self.error_here("name"))
        }
    }

    // ---- recovery ----

    /// Skips to just past the next `;` or to the next `}` at nesting depth 0.
    fn sync_statement(&mut self) {
        let mut depth = 0i32;
        while let Some(t) = self.peek() {
            if t.is_sym("{") || t.is_sym("(") || t.is_sym("[") {
                depth += 1;
            } else if t.is_sym("}") || t.is_sym(")") || t.is_sym("]") {
                if depth == 0 {
                    return;
                }
                depth -= 1;
                if depth == 0 && t.is_sym("}") {
                    self.pos += 1;
                    return;
                }
            } else if t.is_sym(";") && depth == 0 {
                self.pos += 1;
                return;
            }
            self.pos += 1;
        }
    }

    fn at_top_level_start(&self) -> bool {
        self.peek().is_some_and(|t| {
            t.kind == TokenKind::Keyword
                && matches!(
                    t.lexeme.as_str(),
                    "def" | "const" | "main" | "include" | "function" | "external" | "library" | "use"
                )
                || t.is_sym("@")
        })
    }

    fn sync_top_level(&mut self) {
        let mut depth = 0i32;
        while let Some(t) = self.peek() {
            if depth == 0 && self.at_top_level_start() {
                return;
            }
            if t.is_sym("{") {
                depth += 1;
            } else if t.is_sym("}") {
                depth = (depth - 1).max(0);
            }
            self.pos += 1;
        }
    }

    // ---- program ----

    fn program(&mut self) -> Program {
        let mut prog = Program::default();
        while self.peek().is_some() {
            let before = self.pos;
            if let Err(e) = self.top_item(&mut prog) {
                self.errors.push(e);
                if self.pos == before {
                    self.pos += 1;
                }
                self.sync_top_level();
            }
        }
        prog
    }

    fn top_item(&mut self, prog: &mut Program) -> PResult<()> {
        if self.at_sym("@") {
            let mut anns = Vec::new();
            while self.at_sym("@") {
                anns.push(self.annotation()?);
            }
            if self.at_kw("def") {
                let td = self.type_decl(anns)?;
                prog.types.push(td);
            } else {
                prog.annotations.extend(anns);
            }
            return Ok(());
        }
        let t = match self.peek() {
            Some(t) => t.clone(),
            None => return Ok(()),
        };
        if t.kind == TokenKind::Keyword {
            match t.lexeme.as_str() {
                "include" => {
                    self.advance();
                    let path = self.string_literal()?;
                    self.expect_sym(";")?;
                    prog.includes.push(Include {
                        path,
                        span: self.span_from(t.span),
                    });
                    return Ok(());
                }
                "const" => {
                    let c = self.const_decl()?;
                    prog.consts.push(c);
                    return Ok(());
                }
                "function" | "external" => {
                    let f = self.function_decl(Vec::new())?;
                    prog.functions.push(f);
                    return Ok(());
                }
                "def" => {
                    let td = self.type_decl(Vec::new())?;
                    prog.types.push(td);
                    return Ok(());
                }
                "main" => {
                    self.advance();
                    let body = self.block()?;
                    let span = self.span_from(t.span);
                    if prog.main.is_some() {
                        return Err(Diagnostic::error(
                            t.span,
                            "syntax",
                            "more than one main block",
                        ));
                    }
                    prog.main = Some(MainBlock { body, span });
                    self.eat_sym(";");
                    return Ok(());
                }
                "library" | "use" => {
                    self.advance();
                    return Err(Diagnostic::error(
                        t.span,
                        "syntax",
                        format!("`{}` is not yet supported", t.lexeme),
                    ));
                }
                _ => {}
            }
        }
        if t.is_sym(";") {
            self.advance();
            return Ok(());
        }
        Err(self.error_here("a declaration (`include`, `const`, `function`, `def`, `main`)"))
    }

    fn string_literal(&mut self) -> PResult<String> {
        if self.at_kind(TokenKind::StringLiteral) {
            let t = self.advance().unwrap();
            let body = &t.lexeme[1..t.lexeme.len() - 1];
            unescape(body).map_err(|m| Diagnostic::error(t.span, "syntax", m))
        } else {
            Err(self.error_here("string literal"))
        }
    }

    fn annotation(&mut self) -> PResult<Annotation> {
        let start = self.expect_sym("@")?;
        let name = self.name_like()?;
        let properties = if self.at_sym("[") {
            self.properties()?
        } else {
            Vec::new()
        };
        let body = if self.at_kind(TokenKind::AnnotationBody) {
            let t = self.advance().unwrap();
            Some(t.lexeme[2..t.lexeme.len() - 2].to_string())
        } else {
            None
        };
        Ok(Annotation {
            name,
            properties,
            body,
            span: self.span_from(start),
        })
    }

    fn properties(&mut self) -> PResult<Vec<Property>> {
        self.expect_sym("[")?;
        let mut props = Vec::new();
        if !self.at_sym("]") {
            loop {
                props.push(self.property()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym("]")?;
        Ok(props)
    }

    fn property(&mut self) -> PResult<Property> {
        let name = self.name_like()?;
        let value = if self.eat_sym(":") {
            Some(self.expr()?)
        } else {
            None
        };
        Ok(Property { name, value })
    }

    fn const_decl(&mut self) -> PResult<ConstDecl> {
        let start = self.expect_kw("const")?;
        let name = self.ident()?;
        self.expect_sym(":")?;
        let ty = self.type_expr()?;
        self.expect_sym("=")?;
        let value = self.expr()?;
        self.expect_sym(";")?;
        Ok(ConstDecl {
            name,
            ty,
            value,
            span: self.span_from(start),
        })
    }

    fn var_decl(&mut self) -> PResult<VarDecl> {
        let start = self.expect_kw("var")?;
        let properties = if self.at_sym("[") {
            self.properties()?
        } else {
            Vec::new()
        };
        let name = self.ident()?;
        self.expect_sym(":")?;
        let ty = self.type_expr()?;
        let init = if self.eat_sym("=") {
            Some(self.expr()?)
        } else {
            None
        };
        self.expect_sym(";")?;
        Ok(VarDecl {
            properties,
            name,
            ty,
            init,
            span: self.span_from(start),
        })
    }

    fn function_decl(&mut self, annotations: Vec<Annotation>) -> PResult<FunctionDecl> {
        let start = self.current_span();
        let external = self.eat_kw("external");
        self.expect_kw("function")?;
        let mut name = self.name_like()?;
        while self.at_sym(".") {
            self.advance();
            let part = self.name_like()?;
            name = Ident::new(format!("{}.{}", name.name, part.name), name.span.to(part.span));
        }
        self.expect_sym("(")?;
        let mut params = Vec::new();
        if !self.at_sym(")") {
            loop {
                params.push(self.param()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        let ret = if self.eat_sym(":") {
            Some(self.type_expr()?)
        } else {
            None
        };
        let body = if external {
            self.expect_sym(";")?;
            None
        } else {
            Some(self.block()?)
        };
        Ok(FunctionDecl {
            annotations,
            external,
            name,
            params,
            ret,
            body,
            span: self.span_from(start),
        })
    }

    fn param(&mut self) -> PResult<Param> {
        let name = self.ident()?;
        self.expect_sym(":")?;
        let ty = self.type_expr()?;
        Ok(Param { name, ty })
    }

    // ---- types ----

    fn type_expr(&mut self) -> PResult<TypeExpr> {
        let start = self.current_span();
        if self.eat_sym("#") {
            let name = self.ident()?;
            return Ok(TypeExpr {
                kind: TypeExprKind::Placeholder { name: name.name },
                span: self.span_from(start),
            });
        }
        let t = match self.peek() {
            Some(t) => t.clone(),
            None => return Err(self.error_here("type")),
        };
        let kind = match t.kind {
            TokenKind::Identifier => {
                self.advance();
                TypeExprKind::Named { name: t.lexeme }
            }
            TokenKind::Keyword => {
                self.advance();
                if let Some(prim) = PrimType::from_keyword(&t.lexeme) {
                    TypeExprKind::Prim { prim }
                } else {
                    match t.lexeme.as_str() {
                        "any" => TypeExprKind::Any,
                        "actor" => TypeExprKind::Ref { of: RefKind::Actor },
                        "connection" => TypeExprKind::Ref {
                            of: RefKind::Connection,
                        },
                        "object" => TypeExprKind::Ref {
                            of: RefKind::Object,
                        },
                        "array" => {
                            let mut elem = None;
                            let mut size = None;
                            if self.eat_sym("{") {
                                elem = Some(Box::new(self.type_expr()?));
                                if self.eat_sym(",") {
                                    size = Some(Box::new(self.expr()?));
                                }
                                self.expect_sym("}")?;
                            }
                            TypeExprKind::Array { elem, size }
                        }
                        "list" | "set" => {
                            let mut elem = None;
                            if self.eat_sym("{") {
                                elem = Some(Box::new(self.type_expr()?));
                                self.expect_sym("}")?;
                            }
                            if t.lexeme == "list" {
                                TypeExprKind::List { elem }
                            } else {
                                TypeExprKind::Set { elem }
                            }
                        }
                        "map" => {
                            let mut kv = None;
                            if self.eat_sym("{") {
                                let k = self.type_expr()?;
                                self.expect_sym(",")?;
                                let v = self.type_expr()?;
                                self.expect_sym("}")?;
                                kv = Some((Box::new(k), Box::new(v)));
                            }
                            TypeExprKind::Map { kv }
                        }
                        "tuple" => TypeExprKind::Tuple {
                            elems: self.tuple_type_elems()?,
                        },
                        _ => {
                            self.pos -= 1;
                            return Err(self.error_here("type"));
                        }
                    }
                }
            }
            _ => return Err(self.error_here("type")),
        };
        Ok(TypeExpr {
            kind,
            span: self.span_from(start),
        })
    }

    fn tuple_type_elems(&mut self) -> PResult<Vec<TypeExpr>> {
        self.expect_sym("{")?;
        let mut elems = vec![self.type_expr()?];
        while self.eat_sym(",") {
            elems.push(self.type_expr()?);
        }
        self.expect_sym("}")?;
        Ok(elems)
    }

    fn type_decl(&mut self, annotations: Vec<Annotation>) -> PResult<TypeDecl> {
        let start = self.expect_kw("def")?;
        let name = self.ident()?;
        let body = if self.eat_kw("enum") {
            self.expect_sym("{")?;
            let mut items = Vec::new();
            if !self.at_sym("}") {
                loop {
                    let n = self.ident()?;
                    let value = if self.eat_sym("=") {
                        Some(self.expr()?)
                    } else {
                        None
                    };
                    items.push(EnumItem { name: n, value });
                    if !self.eat_sym(",") || self.at_sym("}") {
                        break;
                    }
                }
            }
            self.expect_sym("}")?;
            TypeDeclBody::Enum { items }
        } else if self.at_kw("tuple") && self.at_sym_n(1, "{") {
            self.advance();
            TypeDeclBody::Tuple {
                elems: self.tuple_type_elems()?,
            }
        } else if self.eat_kw("record") {
            self.expect_sym("{")?;
            let mut fields = Vec::new();
            while !self.at_sym("}") {
                let n = self.ident()?;
                self.expect_sym(":")?;
                let ty = self.type_expr()?;
                fields.push(RecordField { name: n, ty });
                if !self.eat_sym(";") && !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym("}")?;
            TypeDeclBody::Record { fields }
        } else if self.at_kw("class") {
            let class = self.class_decl()?;
            self.eat_sym(";");
            return Ok(TypeDecl {
                annotations,
                name,
                body: TypeDeclBody::Class(class),
                span: self.span_from(start),
            });
        } else {
            TypeDeclBody::Alias {
                target: self.type_expr()?,
            }
        };
        self.expect_sym(";")?;
        Ok(TypeDecl {
            annotations,
            name,
            body,
            span: self.span_from(start),
        })
    }

    fn class_decl(&mut self) -> PResult<ClassDecl> {
        self.expect_kw("class")?;
        let mut class_kind = RefKind::Object;
        if self.eat_sym("[") {
            let t = self.peek().cloned();
            class_kind = match t.as_ref().map(|t| t.lexeme.as_str()) {
                Some("actor") => RefKind::Actor,
                Some("connection") => RefKind::Connection,
                Some("object") => RefKind::Object,
                _ => return Err(self.error_here("`actor`, `connection` or `object`")),
            };
            self.advance();
            self.expect_sym("]")?;
        }
        if self.at_kw("extends") {
            return Err(Diagnostic::error(
                self.current_span(),
                "syntax",
                "`extends` is not yet supported",
            ));
        }
        self.expect_sym("{")?;
        let mut members = Vec::new();
        while !self.at_sym("}") {
            if self.peek().is_none() {
                return Err(self.error_here("`}`"));
            }
            let before = self.pos;
            match self.class_member() {
                Ok(Some(m)) => members.push(m),
                Ok(None) => {}
                Err(e) => {
                    self.errors.push(e);
                    if self.pos == before {
                        self.pos += 1;
                    }
                    self.sync_statement();
                }
            }
        }
        self.expect_sym("}")?;
        Ok(ClassDecl {
            class_kind,
            members,
        })
    }

    fn class_member(&mut self) -> PResult<Option<ClassMember>> {
        let mut annotations = Vec::new();
        while self.at_sym("@") {
            annotations.push(self.annotation()?);
        }
        if self.eat_sym(";") {
            return Ok(None);
        }
        if self.at_kw("var") {
            let decl = self.var_decl()?;
            return Ok(Some(ClassMember::Var { annotations, decl }));
        }
        if self.at_kw("const") {
            let decl = self.const_decl()?;
            return Ok(Some(ClassMember::Const { annotations, decl }));
        }
        if self.at_kw("function") || self.at_kw("external") {
            return Ok(Some(ClassMember::Function(self.function_decl(annotations)?)));
        }
        if self.at_kw("do") {
            return Ok(Some(ClassMember::Do(self.do_decl(annotations)?)));
        }
        Err(self.error_here("class member (`var`, `const`, `function`, `do`)"))
    }

    fn do_decl(&mut self, annotations: Vec<Annotation>) -> PResult<DoDecl> {
        let start = self.expect_kw("do")?;
        let mut trigger = DoTrigger::Receive {
            properties: Vec::new(),
        };
        if self.eat_sym("[") {
            if self.at_kw("every") && self.at_sym_n(1, "(") {
                self.advance();
                self.advance();
                let period = self.expr()?;
                self.expect_sym(")")?;
                let mut properties = Vec::new();
                while self.eat_sym(",") {
                    properties.push(self.property()?);
                }
                trigger = DoTrigger::Every { period, properties };
            } else if self.at_kw("on") && self.at_sym_n(1, "(") {
                self.advance();
                self.advance();
                let condition = self.expr()?;
                self.expect_sym(")")?;
                let mut properties = Vec::new();
                while self.eat_sym(",") {
                    properties.push(self.property()?);
                }
                trigger = DoTrigger::On {
                    condition,
                    properties,
                };
            } else {
                let mut properties = Vec::new();
                if !self.at_sym("]") {
                    loop {
                        properties.push(self.property()?);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
                trigger = DoTrigger::Receive { properties };
            }
            self.expect_sym("]")?;
        }
        let name = self.ident()?;
        let params = if self.eat_sym("(") {
            let mut ps = Vec::new();
            if !self.at_sym(")") {
                loop {
                    ps.push(self.param()?);
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym(")")?;
            Some(ps)
        } else {
            None
        };
        let body = self.block()?;
        Ok(DoDecl {
            annotations,
            trigger,
            name,
            params,
            body,
            span: self.span_from(start),
        })
    }

    // ---- statements ----

    fn block(&mut self) -> PResult<Block> {
        let start = self.expect_sym("{")?;
        let mut stmts = Vec::new();
        while !self.at_sym("}") {
            if self.peek().is_none() {
                return Err(self.error_here("`}`"));
            }
            let before = self.pos;
            match self.statement() {
                Ok(Some(s)) => stmts.push(s),
                Ok(None) => {}
                Err(e) => {
                    self.errors.push(e);
                    if self.pos == before {
                        self.pos += 1;
                    }
                    self.sync_statement();
                }
            }
        }
        self.expect_sym("}")?;
        Ok(Block {
            stmts,
            span: self.span_from(start),
        })
    }

    /// Parses one statement; `None` for an empty `;`.
    fn statement(&mut self) -> PResult<Option<Stmt>> {
        let start = self.current_span();
        if self.eat_sym(";") {
            return Ok(None);
        }
        let t = match self.peek() {
            Some(t) => t.clone(),
            None => return Err(self.error_here("statement")),
        };
        let kind = if t.kind == TokenKind::Keyword {
            match t.lexeme.as_str() {
                "var" => StmtKind::Var(self.var_decl()?),
                "const" => StmtKind::Const(self.const_decl()?),
                "return" => {
                    self.advance();
                    let value = if self.at_sym(";") {
                        None
                    } else {
                        Some(self.expr()?)
                    };
                    // `return cases(..){..}` may omit the trailing `;`.
                    let braced = matches!(value, Some(Expr { kind: ExprKind::Cases(_), .. }));
                    if braced {
                        self.eat_sym(";");
                    } else {
                        self.expect_sym(";")?;
                    }
                    StmtKind::Return { value }
                }
                "break" => {
                    self.advance();
                    self.expect_sym(";")?;
                    StmtKind::Break
                }
                "if" => self.if_stmt()?,
                "while" => {
                    self.advance();
                    self.expect_sym("(")?;
                    let cond = self.expr()?;
                    self.expect_sym(")")?;
                    let body = self.block()?;
                    StmtKind::While { cond, body }
                }
                "do" => {
                    self.advance();
                    let body = self.block()?;
                    self.expect_kw("while")?;
                    self.expect_sym("(")?;
                    let cond = self.expr()?;
                    self.expect_sym(")")?;
                    self.expect_sym(";")?;
                    StmtKind::DoWhile { body, cond }
                }
                "foreach" => self.foreach_stmt()?,
                "cases" => {
                    let body = self.cases_body()?;
                    StmtKind::Cases(body)
                }
                "cancel" => {
                    let e = self.cancel_expr()?;
                    self.expect_sym(";")?;
                    StmtKind::Expr { expr: e }
                }
                _ => self.expr_stmt()?,
            }
        } else {
            self.expr_stmt()?
        };
        Ok(Some(Stmt {
            kind,
            span: self.span_from(start),
        }))
    }

    fn expr_stmt(&mut self) -> PResult<StmtKind> {
        let expr = self.expr()?;
        self.expect_sym(";")?;
        Ok(StmtKind::Expr { expr })
    }

    fn if_stmt(&mut self) -> PResult<StmtKind> {
        self.expect_kw("if")?;
        self.expect_sym("(")?;
        let cond = self.expr()?;
        self.expect_sym(")")?;
        let then = self.block()?;
        let els = if self.eat_kw("else") {
            if self.at_kw("if") {
                let start = self.current_span();
                let inner = self.if_stmt()?;
                let span = self.span_from(start);
                Some(Block {
                    stmts: vec![Stmt { kind: inner, span }],
                    span,
                })
            } else {
                Some(self.block()?)
            }
        } else {
            None
        };
        Ok(StmtKind::If { cond, then, els })
    }

    fn foreach_stmt(&mut self) -> PResult<StmtKind> {
        self.expect_kw("foreach")?;
        self.expect_sym("(")?;
        self.expect_kw("var")?;
        let mut vars = Vec::new();
        loop {
            let name = self.ident()?;
            let ty = if self.eat_sym(":") {
                Some(self.type_expr()?)
            } else {
                None
            };
            vars.push(LoopVar { name, ty });
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_kw("in")?;
        let source = self.expr()?;
        self.expect_sym(")")?;
        let body = self.block()?;
        let (iter, iter_name, collection) = match source.kind {
            ExprKind::Call { callee, mut args }
                if args.len() == 1
                    && args[0].name.is_none()
                    && matches!(
                        callee.name.as_str(),
                        "keys" | "values" | "pairs" | "entries"
                    ) =>
            {
                let iter = match callee.name.as_str() {
                    "keys" => IterFn::Keys,
                    "values" => IterFn::Values,
                    _ => IterFn::Pairs,
                };
                (iter, callee.name, args.remove(0).value)
            }
            _ => {
                return Err(Diagnostic::error(
                    source.span,
                    "syntax",
                    "foreach expects `keys(...)`, `values(...)` or `pairs(...)`",
                ))
            }
        };
        Ok(StmtKind::Foreach {
            vars,
            iter,
            iter_name,
            collection,
            body,
        })
    }

    fn cases_body(&mut self) -> PResult<CasesBody> {
        self.expect_kw("cases")?;
        self.expect_sym("(")?;
        let selector = Box::new(self.expr()?);
        self.expect_sym(")")?;
        self.expect_sym("{")?;
        let mut arms = Vec::new();
        let mut otherwise = None;
        loop {
            if self.at_kw("case") {
                let start = self.advance().unwrap().span;
                let value = self.expr()?;
                self.expect_sym(":")?;
                let body = self.arm_statements()?;
                arms.push(CaseArm {
                    value,
                    body,
                    span: self.span_from(start),
                });
            } else if self.at_kw("otherwise") {
                self.advance();
                self.expect_sym(":")?;
                otherwise = Some(self.arm_statements()?);
                break;
            } else {
                break;
            }
        }
        self.expect_sym("}")?;
        if arms.is_empty() && otherwise.is_none() {
            return Err(Diagnostic::error(
                selector.span,
                "syntax",
                "cases needs at least one `case`",
            ));
        }
        Ok(CasesBody {
            selector,
            arms,
            otherwise,
        })
    }

    fn arm_statements(&mut self) -> PResult<Vec<Stmt>> {
        let mut stmts = Vec::new();
        while !(self.at_kw("case") || self.at_kw("otherwise") || self.at_sym("}")) {
            if self.peek().is_none() {
                return Err(self.error_here("`}`"));
            }
            if let Some(s) = self.statement()? {
                stmts.push(s);
            }
        }
        Ok(stmts)
    }

    fn cancel_expr(&mut self) -> PResult<Expr> {
        let start = self.expect_kw("cancel")?;
        let target = if self.eat_sym("*") {
            CancelTarget::All
        } else {
            let mut names = vec![self.ident()?];
            while self.eat_sym(",") {
                names.push(self.ident()?);
            }
            CancelTarget::Names { names }
        };
        Ok(Expr::new(ExprKind::Cancel(target), self.span_from(start)))
    }

    // ---- expressions ----

    pub fn expr(&mut self) -> PResult<Expr> {
        self.assignment()
    }

    fn assignment(&mut self) -> PResult<Expr> {
        let lhs = self.conditional()?;
        let op = match self.peek() {
            Some(t) if t.kind == TokenKind::Operator => match t.lexeme.as_str() {
                "=" => AssignOp::Assign,
                "+=" => AssignOp::Add,
                "-=" => AssignOp::Sub,
                "*=" => AssignOp::Mul,
                "/=" => AssignOp::Div,
                "%=" => AssignOp::Mod,
                _ => return Ok(lhs),
            },
            _ => return Ok(lhs),
        };
        self.advance();
        let value = self.assignment()?;
        let span = lhs.span.to(value.span);
        Ok(Expr::new(
            ExprKind::Assign {
                op,
                target: Box::new(lhs),
                value: Box::new(value),
            },
            span,
        ))
    }

    fn conditional(&mut self) -> PResult<Expr> {
        let cond = self.binary(0)?;
        if !self.at_sym("?") {
            return Ok(cond);
        }
        self.advance();
        let then = self.assignment()?;
        self.expect_sym(":")?;
        let els = self.conditional()?;
        let span = cond.span.to(els.span);
        Ok(Expr::new(
            ExprKind::Cond {
                cond: Box::new(cond),
                then: Box::new(then),
                els: Box::new(els),
            },
            span,
        ))
    }

    fn binop_at(&self) -> Option<(BinOp, u8)> {
        let t = self.peek()?;
        if t.kind != TokenKind::Operator {
            return None;
        }
        Some(match t.lexeme.as_str() {
            "||" => (BinOp::Or, 0),
            "&&" => (BinOp::And, 1),
            "|" => (BinOp::BitOr, 2),
            "^" => (BinOp::BitXor, 3),
            "&" => (BinOp::BitAnd, 4),
            "==" => (BinOp::Eq, 5),
            "!=" => (BinOp::Ne, 5),
            "<" => (BinOp::Lt, 6),
            "<=" => (BinOp::Le, 6),
            ">" => (BinOp::Gt, 6),
            ">=" => (BinOp::Ge, 6),
            "<<" => (BinOp::Shl, 7),
            ">>" => (BinOp::Shr, 7),
            "+" => (BinOp::Add, 8),
            "-" => (BinOp::Sub, 8),
            "*" => (BinOp::Mul, 9),
            "/" => (BinOp::Div, 9),
            "%" => (BinOp::Mod, 9),
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.cast()?;
        while let Some((op, prec)) = self.binop_at() {
            if prec < min_prec {
                break;
            }
            self.advance();
            let rhs = self.binary(prec + 1)?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr::new(
                ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            );
        }
        Ok(lhs)
    }

    fn cast(&mut self) -> PResult<Expr> {
        let mut e = self.unary()?;
        while self.eat_kw("as") {
            let ty = self.type_expr()?;
            let span = e.span.to(ty.span);
            e = Expr::new(
                ExprKind::Cast {
                    operand: Box::new(e),
                    ty,
                },
                span,
            );
        }
        Ok(e)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let op = match self.peek() {
            Some(t) if t.kind == TokenKind::Operator => match t.lexeme.as_str() {
                "-" => Some(UnOp::Neg),
                "!" => Some(UnOp::Not),
                "~" => Some(UnOp::BitNot),
                "++" => Some(UnOp::PreInc),
                "--" => Some(UnOp::PreDec),
                _ => None,
            },
            _ => None,
        };
        if let Some(op) = op {
            let start = self.advance().unwrap().span;
            let operand = self.unary()?;
            let span = start.to(operand.span);
            return Ok(Expr::new(
                ExprKind::Unary {
                    op,
                    operand: Box::new(operand),
                },
                span,
            ));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            if self.at_sym(".") {
                self.advance();
                let field = self.name_like()?;
                if self.at_sym("(") {
                    // Method sugar: `a.f(x)` is `f(a, x)`.
                    let args = self.call_args()?;
                    let span = e.span.to(self.prev_span());
                    let mut all = vec![Arg { name: None, value: e }];
                    all.extend(args);
                    e = Expr::new(ExprKind::Call { callee: field, args: all }, span);
                } else {
                    let span = e.span.to(field.span);
                    e = Expr::new(
                        ExprKind::Member {
                            object: Box::new(e),
                            field,
                        },
                        span,
                    );
                }
            } else if self.at_sym("[") {
                self.advance();
                let index = self.expr()?;
                self.expect_sym("]")?;
                let span = e.span.to(self.prev_span());
                e = Expr::new(
                    ExprKind::Index {
                        object: Box::new(e),
                        index: Box::new(index),
                    },
                    span,
                );
            } else if self.at_sym("(") {
                let callee = match &e.kind {
                    ExprKind::Ident { name } => Ident::new(name.clone(), e.span),
                    _ => return Err(self.error_here("`;` (only named functions can be called)")),
                };
                let args = self.call_args()?;
                let span = e.span.to(self.prev_span());
                e = Expr::new(ExprKind::Call { callee, args }, span);
            } else if self.at_sym("++") || self.at_sym("--") {
                let op = if self.at_sym("++") {
                    UnOp::PostInc
                } else {
                    UnOp::PostDec
                };
                self.advance();
                let span = e.span.to(self.prev_span());
                e = Expr::new(
                    ExprKind::Unary {
                        op,
                        operand: Box::new(e),
                    },
                    span,
                );
            } else if self.at_sym("!") {
                e = self.tell(e)?;
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn tell(&mut self, receiver: Expr) -> PResult<Expr> {
        self.expect_sym("!")?;
        let event = self.name_like()?;
        let args = if self.at_sym("(") {
            self.advance();
            let mut args = Vec::new();
            if !self.at_sym(")") {
                loop {
                    args.push(self.expr()?);
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym(")")?;
            Some(args)
        } else {
            None
        };
        let mut with = Vec::new();
        if self.eat_kw("with") {
            self.expect_sym("(")?;
            if !self.at_sym(")") {
                loop {
                    let key = self.name_like()?;
                    self.expect_sym(":")?;
                    let value = self.expr()?;
                    with.push(WithItem { key, value });
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym(")")?;
        }
        let span = receiver.span.to(self.prev_span());
        Ok(Expr::new(
            ExprKind::Tell {
                receiver: Box::new(receiver),
                event,
                args,
                with,
            },
            span,
        ))
    }

    fn call_args(&mut self) -> PResult<Vec<Arg>> {
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if !self.at_sym(")") {
            loop {
                let name = if self.at_kind(TokenKind::Identifier) && self.at_sym_n(1, ":") {
                    let n = self.ident()?;
                    self.advance();
                    Some(n)
                } else {
                    None
                };
                let value = self.expr()?;
                args.push(Arg { name, value });
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        Ok(args)
    }

    fn expr_list_until(&mut self, close: &str) -> PResult<Vec<Expr>> {
        let mut elems = Vec::new();
        if !self.at_sym(close) {
            loop {
                elems.push(self.expr()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(close)?;
        Ok(elems)
    }

    fn map_entries_until(&mut self, close: &str) -> PResult<Vec<(Expr, Expr)>> {
        let mut entries = Vec::new();
        if !self.at_sym(close) {
            loop {
                let k = self.conditional()?;
                self.expect_sym(":")?;
                let v = self.expr()?;
                entries.push((k, v));
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(close)?;
        Ok(entries)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let t = match self.peek() {
            Some(t) => t.clone(),
            None => return Err(self.error_here("expression")),
        };
        let start = t.span;
        match t.kind {
            TokenKind::IntegerLiteral => {
                self.advance();
                let value = t.lexeme.parse::<u64>().map_err(|_| {
                    Diagnostic::error(t.span, "syntax", "integer literal out of range")
                })?;
                Ok(Expr::new(ExprKind::Int { value }, t.span))
            }
            TokenKind::DecimalLiteral => {
                self.advance();
                Ok(Expr::new(ExprKind::Decimal { text: t.lexeme }, t.span))
            }
            TokenKind::TimespanLiteral => {
                self.advance();
                let value = parse_timespan(&t.lexeme).ok_or_else(|| {
                    Diagnostic::error(t.span, "syntax", "malformed timespan literal")
                })?;
                Ok(Expr::new(ExprKind::Timespan { value }, t.span))
            }
            TokenKind::StringLiteral => {
                self.advance();
                self.string_expr(&t)
            }
            TokenKind::CharLiteral => {
                self.advance();
                let body = unescape(&t.lexeme[1..t.lexeme.len() - 1])
                    .map_err(|m| Diagnostic::error(t.span, "syntax", m))?;
                let mut chars = body.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => Ok(Expr::new(ExprKind::Char { value: c }, t.span)),
                    _ => Err(Diagnostic::error(
                        t.span,
                        "syntax",
                        "char literal must hold one character",
                    )),
                }
            }
            TokenKind::Identifier => {
                self.advance();
                Ok(Expr::new(ExprKind::Ident { name: t.lexeme }, t.span))
            }
            TokenKind::Keyword => match t.lexeme.as_str() {
                "true" | "false" => {
                    self.advance();
                    Ok(Expr::new(
                        ExprKind::Bool {
                            value: t.lexeme == "true",
                        },
                        t.span,
                    ))
                }
                "null" => {
                    self.advance();
                    Ok(Expr::new(ExprKind::Null, t.span))
                }
                "self" => {
                    self.advance();
                    Ok(Expr::new(ExprKind::SelfRef, t.span))
                }
                "array" | "list" | "set" if self.at_sym_n(1, "(") => {
                    self.advance();
                    self.advance();
                    let coll = match t.lexeme.as_str() {
                        "array" => CollectionKind::Array,
                        "list" => CollectionKind::List,
                        _ => CollectionKind::Set,
                    };
                    let elems = self.expr_list_until(")")?;
                    Ok(Expr::new(
                        ExprKind::Collection { coll, elems },
                        self.span_from(start),
                    ))
                }
                "map" if self.at_sym_n(1, "(") => {
                    self.advance();
                    self.advance();
                    let entries = self.map_entries_until(")")?;
                    Ok(Expr::new(ExprKind::Map { entries }, self.span_from(start)))
                }
                "tuple" if self.at_sym_n(1, "(") => {
                    self.advance();
                    self.advance();
                    let elems = self.expr_list_until(")")?;
                    Ok(Expr::new(ExprKind::Tuple { elems }, self.span_from(start)))
                }
                "string" if self.at_sym_n(1, ".") => {
                    // Dotted external such as `string.format(...)`.
                    self.advance();
                    self.advance();
                    let part = self.name_like()?;
                    let name = format!("string.{}", part.name);
                    let span = start.to(part.span);
                    if !self.at_sym("(") {
                        return Err(self.error_here("`(`"));
                    }
                    let args = self.call_args()?;
                    Ok(Expr::new(
                        ExprKind::Call {
                            callee: Ident::new(name, span),
                            args,
                        },
                        self.span_from(start),
                    ))
                }
                "cases" => {
                    let body = self.cases_body()?;
                    Ok(Expr::new(ExprKind::Cases(body), self.span_from(start)))
                }
                "cancel" => self.cancel_expr(),
                _ => Err(self.error_here("expression")),
            },
            TokenKind::Punctuation | TokenKind::Operator => {
                if t.is_sym("(") {
                    self.advance();
                    let e = self.expr()?;
                    self.expect_sym(")")?;
                    Ok(e)
                } else if t.is_sym("[") {
                    self.advance();
                    let elems = self.expr_list_until("]")?;
                    Ok(Expr::new(
                        ExprKind::Collection {
                            coll: CollectionKind::Array,
                            elems,
                        },
                        self.span_from(start),
                    ))
                } else if t.is_sym("{") {
                    self.advance();
                    let entries = self.map_entries_until("}")?;
                    Ok(Expr::new(ExprKind::Map { entries }, self.span_from(start)))
                } else {
                    Err(self.error_here("expression"))
                }
            }
            TokenKind::AnnotationBody => Err(self.error_here("expression")),
        }
    }

    /// Decodes a string literal, desugaring `${expr}` into `+` / `toString`.
    fn string_expr(&mut self, t: &Token) -> PResult<Expr> {
        let raw = &t.lexeme[1..t.lexeme.len() - 1];
        let mut pieces: Vec<Expr> = Vec::new();
        let mut literal = String::new();
        let mut chars = raw.char_indices().peekable();
        let err = |m: String| Diagnostic::error(t.span, "syntax", m);
        while let Some((i, c)) = chars.next() {
            if c == '\\' {
                literal.push(c);
                if let Some((_, n)) = chars.next() {
                    literal.push(n);
                }
                continue;
            }
            if c == '$' && matches!(chars.peek(), Some((_, '{'))) {
                chars.next();
                let inner_start = i + 2;
                let mut depth = 1;
                let mut inner_end = None;
                for (j, ch) in chars.by_ref() {
                    if ch == '{' {
                        depth += 1;
                    } else if ch == '}' {
                        depth -= 1;
                        if depth == 0 {
                            inner_end = Some(j);
                            break;
                        }
                    }
                }
                let inner_end = inner_end.ok_or_else(|| err("unterminated `${` in string".into()))?;
                if !literal.is_empty() {
                    let s = unescape(&literal).map_err(err)?;
                    pieces.push(Expr::new(ExprKind::Str { value: s }, t.span));
                    literal.clear();
                }
                let inner = &raw[inner_start..inner_end];
                let e = self.interpolated(inner, t, 1 + inner_start)?;
                let span = e.span;
                pieces.push(Expr::new(
                    ExprKind::Call {
                        callee: Ident::new("toString", span),
                        args: vec![Arg {
                            name: None,
                            value: e,
                        }],
                    },
                    span,
                ));
                continue;
            }
            literal.push(c);
        }
        if !literal.is_empty() || pieces.is_empty() {
            let s = unescape(&literal).map_err(err)?;
            pieces.push(Expr::new(ExprKind::Str { value: s }, t.span));
        }
        let mut iter = pieces.into_iter();
        let mut acc = iter.next().unwrap();
        for p in iter {
            acc = Expr::new(
                ExprKind::Binary {
                    op: BinOp::Add,
                    lhs: Box::new(acc),
                    rhs: Box::new(p),
                },
                t.span,
            );
        }
        Ok(acc)
    }

    fn interpolated(&mut self, inner: &str, t: &Token, offset_in_lexeme: usize) -> PResult<Expr> {
        let mut tokens = tokenize(inner, self.file).map_err(|mut d| {
            d.span = t.span;
            d
        })?;
        for tok in &mut tokens {
            tok.span.offset += t.span.offset + offset_in_lexeme as u32;
            if tok.span.line == 1 {
                tok.span.column += t.span.column + offset_in_lexeme as u32 - 1;
            }
            tok.span.line += t.span.line - 1;
        }
        let mut sub = Parser {
            tokens,
            pos: 0,
            file: self.file,
            eof_span: t.span,
            errors: Vec::new(),
        };
        let e = sub.expr()?;
        if let Some(extra) = sub.peek() {
            return Err(Diagnostic::error(
                extra.span,
                "syntax",
                format!("unexpected {extra} in string interpolation"),
            ));
        }
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_ok(src: &str) -> Program {
        let (p, errs) = parse_source(src, FileId(0));
        assert!(errs.is_empty(), "unexpected errors: {errs:?}");
        p
    }

    fn expr_of(src: &str) -> Expr {
        parse_expression(src, FileId(0)).unwrap()
    }

    #[test]
    fn minimal_main() {
        let p = parse_ok("main{}");
        assert!(p.main.unwrap().body.stmts.is_empty());
    }

    #[test]
    fn precedence() {
        let e = expr_of("1 + 2 * 3");
        match e.kind {
            ExprKind::Binary { op: BinOp::Add, rhs, .. } => {
                assert!(matches!(rhs.kind, ExprKind::Binary { op: BinOp::Mul, .. }))
            }
            other => panic!("{other:?}"),
        }
        let e = expr_of("a && b || c");
        assert!(matches!(e.kind, ExprKind::Binary { op: BinOp::Or, .. }));
        let e = expr_of("prev(level)<=maxLevel && level>maxLevel");
        assert!(matches!(e.kind, ExprKind::Binary { op: BinOp::And, .. }));
    }

    #[test]
    fn cast_binds_tighter_than_division() {
        let e = expr_of("(period as double) / (SIM_TIME_UNIT as double)");
        match e.kind {
            ExprKind::Binary { op: BinOp::Div, lhs, rhs } => {
                assert!(matches!(lhs.kind, ExprKind::Cast { .. }));
                assert!(matches!(rhs.kind, ExprKind::Cast { .. }));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tell_forms() {
        let e = expr_of("r!doSmth(a) with(after:2s, sender:self)");
        match e.kind {
            ExprKind::Tell { event, args, with, .. } => {
                assert_eq!(event.name, "doSmth");
                assert_eq!(args.unwrap().len(), 1);
                assert_eq!(with.len(), 2);
                assert_eq!(with[0].key.name, "after");
            }
            other => panic!("{other:?}"),
        }
        let e = expr_of("self!stop");
        assert!(matches!(e.kind, ExprKind::Tell { args: None, .. }));
        let e = expr_of("self!stop()");
        assert!(matches!(e.kind, ExprKind::Tell { args: Some(ref a), .. } if a.is_empty()));
    }

    #[test]
    fn cancel_statement() {
        let p = parse_ok("def A class[actor]{ do stop { cancel drip; cancel *; cancel a, b; } }");
        let TypeDeclBody::Class(c) = &p.types[0].body else {
            panic!()
        };
        let ClassMember::Do(d) = &c.members[0] else {
            panic!()
        };
        let names: Vec<_> = d
            .body
            .stmts
            .iter()
            .map(|s| match &s.kind {
                StmtKind::Expr {
                    expr:
                        Expr {
                            kind: ExprKind::Cancel(t),
                            ..
                        },
                } => t.clone(),
                other => panic!("{other:?}"),
            })
            .collect();
        assert_eq!(
            names[0],
            CancelTarget::Names {
                names: vec![Ident::new("drip", names_span(&names[0]))]
            }
        );
        assert_eq!(names[1], CancelTarget::All);
    }

    fn names_span(t: &CancelTarget) -> Span {
        match t {
            CancelTarget::Names { names } => names[0].span,
            CancelTarget::All => Span::default(),
        }
    }

    #[test]
    fn interpolation_desugars() {
        let e = expr_of("\"I, ${name}, heard\"");
        match e.kind {
            ExprKind::Binary { op: BinOp::Add, lhs, rhs } => {
                assert!(matches!(rhs.kind, ExprKind::Str { ref value } if value == ", heard"));
                match lhs.kind {
                    ExprKind::Binary { rhs, .. } => {
                        assert!(matches!(rhs.kind, ExprKind::Call { ref callee, .. } if callee.name == "toString"))
                    }
                    other => panic!("{other:?}"),
                }
            }
            other => panic!("{other:?}"),
        }
        let e = expr_of("\"cost: \\${x}\"");
        assert!(matches!(e.kind, ExprKind::Str { ref value } if value == "cost: ${x}"));
    }

    #[test]
    fn shorthand_literals() {
        assert!(matches!(
            expr_of("[1,2,3]").kind,
            ExprKind::Collection { coll: CollectionKind::Array, ref elems } if elems.len() == 3
        ));
        assert!(matches!(
            expr_of("{\"d\":4, \"e\":5}").kind,
            ExprKind::Map { ref entries } if entries.len() == 2
        ));
    }

    #[test]
    fn method_sugar_and_dotted_external() {
        match expr_of("talkers.add(x)").kind {
            ExprKind::Call { callee, args } => {
                assert_eq!(callee.name, "add");
                assert_eq!(args.len(), 2);
            }
            other => panic!("{other:?}"),
        }
        match expr_of("string.format(\"%d\", count)").kind {
            ExprKind::Call { callee, args } => {
                assert_eq!(callee.name, "string.format");
                assert_eq!(args.len(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cases_expression_and_statement() {
        let src = "function f(s:int):int{ return cases(s){ case 1: 2; case 2: 3; otherwise: 0; } }";
        let p = parse_ok(src);
        let body = p.functions[0].body.as_ref().unwrap();
        match &body.stmts[0].kind {
            StmtKind::Return {
                value: Some(Expr { kind: ExprKind::Cases(c), .. }),
            } => {
                assert_eq!(c.arms.len(), 2);
                assert_eq!(c.otherwise.as_ref().unwrap().len(), 1);
            }
            other => panic!("{other:?}"),
        }
        let p = parse_ok("main{ cases(x){ case 1: println(\"a\"); otherwise:; } }");
        assert!(matches!(
            p.main.unwrap().body.stmts[0].kind,
            StmtKind::Cases(ref c) if c.otherwise.as_ref().unwrap().is_empty()
        ));
    }

    #[test]
    fn do_triggers() {
        let p = parse_ok(
            "def T class[actor]{ do[every(1s)] a{} do[on(x>1)] b{} do c(u:float){} do[priority:1] d{} }",
        );
        let TypeDeclBody::Class(c) = &p.types[0].body else {
            panic!()
        };
        let triggers: Vec<_> = c
            .members
            .iter()
            .map(|m| match m {
                ClassMember::Do(d) => d.trigger.clone(),
                _ => panic!(),
            })
            .collect();
        assert!(matches!(triggers[0], DoTrigger::Every { .. }));
        assert!(matches!(triggers[1], DoTrigger::On { .. }));
        assert!(matches!(triggers[2], DoTrigger::Receive { ref properties } if properties.is_empty()));
        assert!(matches!(triggers[3], DoTrigger::Receive { ref properties } if properties.len() == 1));
    }

    #[test]
    fn errors_recover_per_statement() {
        let (_, errs) = parse_source("main{ var x:int = ; var y:int = 2 + ; x = 1; }", FileId(0));
        assert_eq!(errs.len(), 2, "{errs:?}");
        for e in &errs {
            assert_eq!(e.rule, "syntax");
            assert!(e.span.end() <= 48);
        }
    }

    #[test]
    fn unsupported_constructs() {
        let (_, errs) = parse_source("library common{ }", FileId(0));
        assert!(errs[0].message.contains("not yet supported"));
        let (_, errs) = parse_source("def A class[actor] extends B {}", FileId(0));
        assert!(errs[0].message.contains("not yet supported"));
    }

    #[test]
    fn types_and_enums() {
        let p = parse_ok(
            "def modes enum{OFF=0,ON}; def A array{int,3}; def P record{name:string;age:int;}; def T tuple{bool,int,string}; def M map{string,int};",
        );
        assert_eq!(p.types.len(), 5);
        assert!(matches!(p.types[0].body, TypeDeclBody::Enum { ref items } if items.len() == 2));
        assert!(matches!(p.types[2].body, TypeDeclBody::Record { ref fields } if fields.len() == 2));
    }

    #[test]
    fn external_declarations() {
        let p = parse_ok("external function prev(s:#T):#T; external function string.format(f:string):string;");
        assert_eq!(p.functions.len(), 2);
        assert_eq!(p.functions[1].name.name, "string.format");
        assert!(matches!(
            p.functions[0].ret.as_ref().unwrap().kind,
            TypeExprKind::Placeholder { .. }
        ));
    }

    #[test]
    fn annotations_attach() {
        let p = parse_ok("@property{= LTL{ a: G(x); } =}\nconst a:int = 1;\n@rebeca[queue:3]\ndef B class[actor]{ }");
        assert_eq!(p.annotations.len(), 1);
        assert!(p.annotations[0].body.as_ref().unwrap().contains("LTL"));
        assert_eq!(p.types[0].annotations.len(), 1);
    }
}
