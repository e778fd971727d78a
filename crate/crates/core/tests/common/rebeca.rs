//! A small reader and interpreter for the Timed Rebeca subset the generator
//! emits. It knows nothing about the generator; it works from the text.

use std::collections::{BTreeMap, BTreeSet, HashMap};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Real(f64),
    Sym(&'static str),
}

const SYMS: &[&str] = &[
    "==", "!=", "<=", ">=", "&&", "||", "->", "{", "}", "(", ")", ";", ",", ".", "=", "<", ">", "+", "-", "*", "/", "!", ":",
];

fn lex(src: &str) -> Vec<Tok> {
    let mut out = Vec::new();
    let b = src.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if src[i..].starts_with("//") {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
        } else if c.is_ascii_digit() {
            let start = i;
            while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                i += 1;
            }
            let text = &src[start..i];
            out.push(if text.contains('.') { Tok::Real(text.parse().unwrap()) } else { Tok::Int(text.parse().unwrap()) });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push(Tok::Ident(src[start..i].to_string()));
        } else {
            let s = SYMS.iter().find(|s| src[i..].starts_with(**s)).unwrap_or_else(|| panic!("unexpected `{c}`"));
            out.push(Tok::Sym(s));
            i += s.len();
        }
    }
    out
}

#[derive(Debug, Clone)]
pub enum Expr {
    Int(i64),
    Real(f64),
    Var(String),
    Field(String),
    Call(String, Vec<Expr>),
    Cast(&'static str, Box<Expr>),
    Neg(Box<Expr>),
    Bin(&'static str, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone)]
pub enum Stmt {
    Decl(String, Option<Expr>),
    Assign(String, Expr),
    SetField(String, Expr),
    If(Expr, Vec<Stmt>, Vec<Stmt>),
    Return(Expr),
    Send { target: String, msg: String, after: Option<Expr> },
}

#[derive(Debug, Clone)]
pub struct Method {
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Default)]
pub struct RebecaModel {
    pub env: BTreeMap<String, Value>,
    pub class: String,
    pub queue: i64,
    pub statevars: BTreeSet<String>,
    pub constructor: Option<Method>,
    pub msgsrvs: HashMap<String, Method>,
    pub methods: HashMap<String, Method>,
    pub has_property: bool,
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }
    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k)
    }
    fn next(&mut self) -> Tok {
        self.pos += 1;
        self.toks[self.pos - 1].clone()
    }
    fn is(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s) || matches!(self.peek(), Some(Tok::Ident(x)) if x == s)
    }
    fn eat(&mut self, s: &str) -> bool {
        if self.is(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }
    fn expect(&mut self, s: &str) {
        assert!(self.eat(s), "expected `{s}` at {:?}", self.peek());
    }
    fn ident(&mut self) -> String {
        match self.next() {
            Tok::Ident(s) => s,
            t => panic!("expected identifier, got {t:?}"),
        }
    }
    fn skip_block(&mut self) {
        self.expect("{");
        let mut depth = 1;
        while depth > 0 {
            match self.next() {
                Tok::Sym("{") => depth += 1,
                Tok::Sym("}") => depth -= 1,
                _ => {}
            }
        }
    }

    fn model(&mut self) -> RebecaModel {
        let mut m = RebecaModel::default();
        while self.peek().is_some() {
            if self.eat("env") {
                self.ident();
                let name = self.ident();
                self.expect("=");
                let v = eval_const(&self.expr());
                self.expect(";");
                m.env.insert(name, v);
            } else if self.eat("reactiveclass") {
                m.class = self.ident();
                self.expect("(");
                m.queue = match self.next() {
                    Tok::Int(n) => n,
                    t => panic!("queue size {t:?}"),
                };
                self.expect(")");
                self.class_body(&mut m);
            } else if self.eat("main") {
                self.skip_block();
            } else if self.eat("property") {
                m.has_property = true;
                self.skip_block();
            } else {
                panic!("unexpected {:?}", self.peek());
            }
        }
        m
    }

    fn class_body(&mut self, m: &mut RebecaModel) {
        self.expect("{");
        while !self.eat("}") {
            if self.eat("knownrebecs") {
                self.skip_block();
            } else if self.eat("statevars") {
                self.expect("{");
                while !self.eat("}") {
                    self.ident();
                    m.statevars.insert(self.ident());
                    self.expect(";");
                }
            } else if self.eat("msgsrv") {
                let name = self.ident();
                let method = self.method();
                m.msgsrvs.insert(name, method);
            } else if matches!(self.peek(), Some(Tok::Ident(n)) if *n == m.class) {
                self.next();
                m.constructor = Some(self.method());
            } else {
                self.ident();
                let name = self.ident();
                let method = self.method();
                m.methods.insert(name, method);
            }
        }
    }

    fn method(&mut self) -> Method {
        self.expect("(");
        let mut params = Vec::new();
        while !self.eat(")") {
            self.ident();
            params.push(self.ident());
            self.eat(",");
        }
        Method { params, body: self.block() }
    }

    fn block(&mut self) -> Vec<Stmt> {
        self.expect("{");
        let mut out = Vec::new();
        while !self.eat("}") {
            out.push(self.stmt());
        }
        out
    }

    fn stmt(&mut self) -> Stmt {
        if self.eat("if") {
            self.expect("(");
            let c = self.expr();
            self.expect(")");
            let then = self.block();
            let other = if self.eat("else") {
                if self.is("if") {
                    vec![self.stmt()]
                } else {
                    self.block()
                }
            } else {
                vec![]
            };
            return Stmt::If(c, then, other);
        }
        if self.eat("return") {
            let e = self.expr();
            self.expect(";");
            return Stmt::Return(e);
        }
        let is_type = |t: Option<&Tok>| matches!(t, Some(Tok::Ident(x)) if ["int", "double", "boolean", "byte", "short", "float"].contains(&x.as_str()));
        if is_type(self.peek()) {
            self.next();
            let name = self.ident();
            let init = self.eat("=").then(|| self.expr());
            self.expect(";");
            return Stmt::Decl(name, init);
        }
        let first = self.ident();
        if self.eat(".") {
            let member = self.ident();
            if self.eat("(") {
                self.expect(")");
                let after = if self.eat("after") {
                    self.expect("(");
                    let e = self.expr();
                    self.expect(")");
                    Some(e)
                } else {
                    None
                };
                self.expect(";");
                return Stmt::Send { target: first, msg: member, after };
            }
            assert_eq!(first, "self");
            self.expect("=");
            let e = self.expr();
            self.expect(";");
            return Stmt::SetField(member, e);
        }
        self.expect("=");
        let e = self.expr();
        self.expect(";");
        Stmt::Assign(first, e)
    }

    fn expr(&mut self) -> Expr {
        self.binary(0)
    }

    fn binary(&mut self, level: usize) -> Expr {
        const LEVELS: &[&[&str]] = &[&["||"], &["&&"], &["==", "!="], &["<", "<=", ">", ">="], &["+", "-"], &["*", "/"]];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1);
        loop {
            let op = LEVELS[level].iter().find(|op| matches!(self.peek(), Some(Tok::Sym(s)) if s == *op));
            let Some(op) = op else { return lhs };
            self.next();
            let rhs = self.binary(level + 1);
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Expr {
        if self.eat("-") {
            return Expr::Neg(Box::new(self.unary()));
        }
        if self.is("(") {
            if let (Some(Tok::Ident(t)), Some(Tok::Sym(")"))) = (self.peek_at(1), self.peek_at(2)) {
                let ty: &'static str = match t.as_str() {
                    "int" => "int",
                    "double" => "double",
                    _ => "",
                };
                if !ty.is_empty() {
                    self.pos += 3;
                    return Expr::Cast(ty, Box::new(self.unary()));
                }
            }
            self.next();
            let e = self.expr();
            self.expect(")");
            return e;
        }
        match self.next() {
            Tok::Int(n) => Expr::Int(n),
            Tok::Real(x) => Expr::Real(x),
            Tok::Ident(s) if s == "self" => {
                self.expect(".");
                let name = self.ident();
                if self.eat("(") {
                    self.call_args(name)
                } else {
                    Expr::Field(name)
                }
            }
            Tok::Ident(s) => {
                if self.eat("(") {
                    self.call_args(s)
                } else {
                    Expr::Var(s)
                }
            }
            t => panic!("unexpected {t:?}"),
        }
    }

    fn call_args(&mut self, name: String) -> Expr {
        let mut args = Vec::new();
        while !self.eat(")") {
            args.push(self.expr());
            self.eat(",");
        }
        Expr::Call(name, args)
    }
}

pub fn parse(src: &str) -> RebecaModel {
    Parser { toks: lex(src), pos: 0 }.model()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Int(i64),
    Real(f64),
    Bool(bool),
}

impl Value {
    pub fn real(self) -> f64 {
        match self {
            Value::Int(n) => n as f64,
            Value::Real(x) => x,
            Value::Bool(_) => panic!("bool used as number"),
        }
    }
}

fn eval_const(e: &Expr) -> Value {
    match e {
        Expr::Int(n) => Value::Int(*n),
        Expr::Real(x) => Value::Real(*x),
        Expr::Neg(x) => match eval_const(x) {
            Value::Int(n) => Value::Int(-n),
            v => Value::Real(-v.real()),
        },
        other => panic!("non-constant env initializer {other:?}"),
    }
}

/// One rebec's state plus the model it runs.
pub struct Rebec<'a> {
    pub model: &'a RebecaModel,
    pub fields: HashMap<String, Value>,
    /// Messages sent to self, with their delay.
    pub sent: Vec<(String, i64)>,
}

enum Flow {
    Next,
    Return(Value),
}

impl<'a> Rebec<'a> {
    pub fn new(model: &'a RebecaModel) -> Self {
        Rebec { model, fields: HashMap::new(), sent: Vec::new() }
    }

    pub fn call(&mut self, name: &str, args: Vec<Value>) -> Option<Value> {
        let m = self.model.methods.get(name).unwrap_or_else(|| panic!("no method {name}"));
        let mut locals: HashMap<String, Value> = m.params.iter().cloned().zip(args).collect();
        match self.block(&m.body, &mut locals) {
            Flow::Return(v) => Some(v),
            Flow::Next => None,
        }
    }

    /// Runs a message server with `locals` pre-bound; declarations of names
    /// already bound are skipped, which lets a caller inject values in place
    /// of the server's own prologue.
    pub fn serve(&mut self, name: &str, mut locals: HashMap<String, Value>) -> HashMap<String, Value> {
        let m = &self.model.msgsrvs[name];
        self.block(&m.body, &mut locals);
        locals
    }

    fn block(&mut self, body: &[Stmt], locals: &mut HashMap<String, Value>) -> Flow {
        for s in body {
            match s {
                Stmt::Decl(n, init) => {
                    if locals.contains_key(n) {
                        continue;
                    }
                    let v = init.as_ref().map(|e| self.eval(e, locals)).unwrap_or(Value::Int(0));
                    locals.insert(n.clone(), v);
                }
                Stmt::Assign(n, e) => {
                    let v = self.eval(e, locals);
                    let slot = locals.get_mut(n).unwrap_or_else(|| panic!("undeclared {n}"));
                    *slot = coerce_like(*slot, v);
                }
                Stmt::SetField(n, e) => {
                    let v = self.eval(e, locals);
                    self.fields.insert(n.clone(), v);
                }
                Stmt::If(c, a, b) => {
                    let branch = if self.eval(c, locals) == Value::Bool(true) { a } else { b };
                    if let Flow::Return(v) = self.block(branch, locals) {
                        return Flow::Return(v);
                    }
                }
                Stmt::Return(e) => return Flow::Return(self.eval(e, locals)),
                Stmt::Send { target, msg, after } => {
                    assert_eq!(target, "self");
                    let d = after.as_ref().map(|e| self.eval(e, locals)).unwrap_or(Value::Int(0));
                    let Value::Int(d) = d else { panic!("after() needs an int") };
                    self.sent.push((msg.clone(), d));
                }
            }
        }
        Flow::Next
    }

    fn eval(&mut self, e: &Expr, locals: &HashMap<String, Value>) -> Value {
        match e {
            Expr::Int(n) => Value::Int(*n),
            Expr::Real(x) => Value::Real(*x),
            Expr::Var(n) => *locals
                .get(n)
                .or_else(|| self.model.env.get(n))
                .or_else(|| self.fields.get(n))
                .unwrap_or_else(|| panic!("unbound {n}")),
            Expr::Field(n) => self.fields[n],
            Expr::Call(n, args) => {
                let args = args.iter().map(|a| self.eval(a, locals)).collect();
                self.call(n, args).expect("function returns a value")
            }
            Expr::Cast("int", x) => match self.eval(x, locals) {
                Value::Real(r) => Value::Int(r.trunc() as i64),
                v => v,
            },
            Expr::Cast(_, x) => Value::Real(self.eval(x, locals).real()),
            Expr::Neg(x) => match self.eval(x, locals) {
                Value::Int(n) => Value::Int(-n),
                v => Value::Real(-v.real()),
            },
            Expr::Bin(op, a, b) => {
                let (a, b) = (self.eval(a, locals), self.eval(b, locals));
                binary(op, a, b)
            }
        }
    }
}

fn coerce_like(slot: Value, v: Value) -> Value {
    match (slot, v) {
        (Value::Real(_), Value::Int(n)) => Value::Real(n as f64),
        _ => v,
    }
}

fn binary(op: &str, a: Value, b: Value) -> Value {
    if let (Value::Bool(x), Value::Bool(y)) = (a, b) {
        return Value::Bool(match op {
            "&&" => x && y,
            "||" => x || y,
            "==" => x == y,
            "!=" => x != y,
            _ => panic!("{op} on bools"),
        });
    }
    if let (Value::Int(x), Value::Int(y)) = (a, b) {
        return match op {
            "+" => Value::Int(x + y),
            "-" => Value::Int(x - y),
            "*" => Value::Int(x * y),
            "/" => Value::Int(x / y),
            _ => Value::Bool(compare(op, x.cmp(&y))),
        };
    }
    let (x, y) = (a.real(), b.real());
    match op {
        "+" => Value::Real(x + y),
        "-" => Value::Real(x - y),
        "*" => Value::Real(x * y),
        "/" => Value::Real(x / y),
        _ => Value::Bool(compare(op, x.partial_cmp(&y).expect("comparable"))),
    }
}

fn compare(op: &str, o: std::cmp::Ordering) -> bool {
    use std::cmp::Ordering::*;
    match op {
        "<" => o == Less,
        "<=" => o != Greater,
        ">" => o == Greater,
        ">=" => o != Less,
        "==" => o == Equal,
        "!=" => o != Equal,
        _ => panic!("unknown operator {op}"),
    }
}
