//! Prints a raw AST back to M source. Compound expressions are fully
//! parenthesized so re-parsing reproduces the same tree.

use super::ast::*;
use std::fmt::Write;

pub fn print_program(p: &Program) -> String {
    let mut pr = Printer::default();
    pr.program(p);
    pr.out
}

pub fn print_expr(e: &Expr) -> String {
    let mut pr = Printer::default();
    pr.expr(e);
    pr.out
}

pub fn print_type(t: &TypeExpr) -> String {
    let mut pr = Printer::default();
    pr.ty(t);
    pr.out
}

#[derive(Default)]
struct Printer {
    out: String,
    indent: usize,
}

fn escape(s: &str, quote: char) -> String {
    let mut out = String::new();
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            '\0' => out.push_str("\\0"),
            '$' if quote == '"' => out.push_str("\\$"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out
}

impl Printer {
    fn line(&mut self, s: &str) {
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn pad(&mut self) {
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
    }

    fn program(&mut self, p: &Program) {
        for a in &p.annotations {
            self.pad();
            self.annotation(a);
            self.out.push_str(";\n");
        }
        for inc in &p.includes {
            self.line(&format!("include \"{}\";", escape(&inc.path, '"')));
        }
        for c in &p.consts {
            self.pad();
            self.const_decl(c);
            self.out.push('\n');
        }
        for f in &p.functions {
            self.function(f);
        }
        for t in &p.types {
            self.type_decl(t);
        }
        if let Some(m) = &p.main {
            self.pad();
            self.out.push_str("main ");
            self.block(&m.body);
            self.out.push('\n');
        }
    }

    fn annotation(&mut self, a: &Annotation) {
        self.out.push('@');
        self.out.push_str(&a.name.name);
        if !a.properties.is_empty() {
            self.properties(&a.properties);
        }
        if let Some(body) = &a.body {
            write!(self.out, "{{={body}=}}").unwrap();
        }
    }

    fn annotations_line(&mut self, anns: &[Annotation]) {
        for a in anns {
            self.pad();
            self.annotation(a);
            self.out.push('\n');
        }
    }

    fn properties(&mut self, props: &[Property]) {
        self.out.push('[');
        for (i, p) in props.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.property(p);
        }
        self.out.push(']');
    }

    fn property(&mut self, p: &Property) {
        self.out.push_str(&p.name.name);
        if let Some(v) = &p.value {
            self.out.push(':');
            self.expr(v);
        }
    }

    fn const_decl(&mut self, c: &ConstDecl) {
        write!(self.out, "const {}:", c.name.name).unwrap();
        self.ty(&c.ty);
        self.out.push_str(" = ");
        self.expr(&c.value);
        self.out.push(';');
    }

    fn var_decl(&mut self, v: &VarDecl) {
        self.out.push_str("var");
        if !v.properties.is_empty() {
            self.properties(&v.properties);
        }
        write!(self.out, " {}:", v.name.name).unwrap();
        self.ty(&v.ty);
        if let Some(init) = &v.init {
            self.out.push_str(" = ");
            self.expr(init);
        }
        self.out.push(';');
    }

    fn params(&mut self, ps: &[Param]) {
        self.out.push('(');
        for (i, p) in ps.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            write!(self.out, "{}:", p.name.name).unwrap();
            self.ty(&p.ty);
        }
        self.out.push(')');
    }

    fn function(&mut self, f: &FunctionDecl) {
        self.annotations_line(&f.annotations);
        self.pad();
        if f.external {
            self.out.push_str("external ");
        }
        write!(self.out, "function {}", f.name.name).unwrap();
        self.params(&f.params);
        if let Some(r) = &f.ret {
            self.out.push(':');
            self.ty(r);
        }
        match &f.body {
            Some(b) => {
                self.out.push(' ');
                self.block(b);
                self.out.push('\n');
            }
            None => self.out.push_str(";\n"),
        }
    }

    fn ty(&mut self, t: &TypeExpr) {
        match &t.kind {
            TypeExprKind::Any => self.out.push_str("any"),
            TypeExprKind::Prim { prim } => self.out.push_str(prim.keyword()),
            TypeExprKind::Ref { of } => self.out.push_str(of.keyword()),
            TypeExprKind::Named { name } => self.out.push_str(name),
            TypeExprKind::Placeholder { name } => write!(self.out, "#{name}").unwrap(),
            TypeExprKind::Array { elem, size } => {
                self.out.push_str("array");
                if let Some(e) = elem {
                    self.out.push('{');
                    self.ty(e);
                    if let Some(s) = size {
                        self.out.push_str(", ");
                        self.expr(s);
                    }
                    self.out.push('}');
                }
            }
            TypeExprKind::List { elem } | TypeExprKind::Set { elem } => {
                self.out.push_str(if matches!(t.kind, TypeExprKind::List { .. }) {
                    "list"
                } else {
                    "set"
                });
                if let Some(e) = elem {
                    self.out.push('{');
                    self.ty(e);
                    self.out.push('}');
                }
            }
            TypeExprKind::Map { kv } => {
                self.out.push_str("map");
                if let Some((k, v)) = kv {
                    self.out.push('{');
                    self.ty(k);
                    self.out.push_str(", ");
                    self.ty(v);
                    self.out.push('}');
                }
            }
            TypeExprKind::Tuple { elems } => {
                self.out.push_str("tuple{");
                self.type_list(elems);
                self.out.push('}');
            }
        }
    }

    fn type_list(&mut self, elems: &[TypeExpr]) {
        for (i, e) in elems.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.ty(e);
        }
    }

    fn type_decl(&mut self, t: &TypeDecl) {
        self.annotations_line(&t.annotations);
        self.pad();
        write!(self.out, "def {} ", t.name.name).unwrap();
        match &t.body {
            TypeDeclBody::Alias { target } => {
                self.ty(target);
                self.out.push_str(";\n");
            }
            TypeDeclBody::Enum { items } => {
                self.out.push_str("enum{");
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    self.out.push_str(&item.name.name);
                    if let Some(v) = &item.value {
                        self.out.push_str(" = ");
                        self.expr(v);
                    }
                }
                self.out.push_str("};\n");
            }
            TypeDeclBody::Tuple { elems } => {
                self.out.push_str("tuple{");
                self.type_list(elems);
                self.out.push_str("};\n");
            }
            TypeDeclBody::Record { fields } => {
                self.out.push_str("record{");
                for f in fields {
                    write!(self.out, "{}:", f.name.name).unwrap();
                    self.ty(&f.ty);
                    self.out.push(';');
                }
                self.out.push_str("};\n");
            }
            TypeDeclBody::Class(c) => {
                writeln!(self.out, "class[{}] {{", c.class_kind.keyword()).unwrap();
                self.indent += 1;
                for m in &c.members {
                    self.member(m);
                }
                self.indent -= 1;
                self.line("};");
            }
        }
    }

    fn member(&mut self, m: &ClassMember) {
        match m {
            ClassMember::Var { annotations, decl } => {
                self.annotations_line(annotations);
                self.pad();
                self.var_decl(decl);
                self.out.push('\n');
            }
            ClassMember::Const { annotations, decl } => {
                self.annotations_line(annotations);
                self.pad();
                self.const_decl(decl);
                self.out.push('\n');
            }
            ClassMember::Function(f) => self.function(f),
            ClassMember::Do(d) => {
                self.annotations_line(&d.annotations);
                self.pad();
                self.out.push_str("do");
                match &d.trigger {
                    DoTrigger::Receive { properties } => {
                        if !properties.is_empty() {
                            self.properties(properties);
                        }
                    }
                    DoTrigger::Every { period, properties } => {
                        self.out.push_str("[every(");
                        self.expr(period);
                        self.out.push(')');
                        for p in properties {
                            self.out.push_str(", ");
                            self.property(p);
                        }
                        self.out.push(']');
                    }
                    DoTrigger::On {
                        condition,
                        properties,
                    } => {
                        self.out.push_str("[on(");
                        self.expr(condition);
                        self.out.push(')');
                        for p in properties {
                            self.out.push_str(", ");
                            self.property(p);
                        }
                        self.out.push(']');
                    }
                }
                write!(self.out, " {}", d.name.name).unwrap();
                if let Some(ps) = &d.params {
                    self.params(ps);
                }
                self.out.push(' ');
                self.block(&d.body);
                self.out.push('\n');
            }
        }
    }

    fn block(&mut self, b: &Block) {
        self.out.push_str("{\n");
        self.indent += 1;
        for s in &b.stmts {
            self.stmt(s);
        }
        self.indent -= 1;
        self.pad();
        self.out.push('}');
    }

    fn stmt(&mut self, s: &Stmt) {
        self.pad();
        match &s.kind {
            StmtKind::Var(v) => self.var_decl(v),
            StmtKind::Const(c) => self.const_decl(c),
            StmtKind::Expr { expr } => {
                self.top_expr(expr);
                self.out.push(';');
            }
            StmtKind::Return { value } => {
                self.out.push_str("return");
                if let Some(v) = value {
                    self.out.push(' ');
                    self.expr(v);
                }
                self.out.push(';');
            }
            StmtKind::If { cond, then, els } => {
                self.out.push_str("if (");
                self.expr(cond);
                self.out.push_str(") ");
                self.block(then);
                if let Some(e) = els {
                    self.out.push_str(" else ");
                    self.block(e);
                }
            }
            StmtKind::Cases(c) => self.cases(c),
            StmtKind::While { cond, body } => {
                self.out.push_str("while (");
                self.expr(cond);
                self.out.push_str(") ");
                self.block(body);
            }
            StmtKind::DoWhile { body, cond } => {
                self.out.push_str("do ");
                self.block(body);
                self.out.push_str(" while (");
                self.expr(cond);
                self.out.push_str(");");
            }
            StmtKind::Foreach {
                vars,
                iter_name,
                collection,
                body,
                ..
            } => {
                self.out.push_str("foreach (var ");
                for (i, v) in vars.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    self.out.push_str(&v.name.name);
                    if let Some(t) = &v.ty {
                        self.out.push(':');
                        self.ty(t);
                    }
                }
                write!(self.out, " in {iter_name}(").unwrap();
                self.expr(collection);
                self.out.push_str(")) ");
                self.block(body);
            }
            StmtKind::Break => self.out.push_str("break;"),
        }
        self.out.push('\n');
    }

    fn cases(&mut self, c: &CasesBody) {
        self.out.push_str("cases (");
        self.expr(&c.selector);
        self.out.push_str(") {\n");
        self.indent += 1;
        for arm in &c.arms {
            self.pad();
            self.out.push_str("case ");
            self.expr(&arm.value);
            self.out.push_str(":\n");
            self.indent += 1;
            for s in &arm.body {
                self.stmt(s);
            }
            self.indent -= 1;
        }
        if let Some(o) = &c.otherwise {
            self.line("otherwise:");
            self.indent += 1;
            for s in o {
                self.stmt(s);
            }
            self.indent -= 1;
        }
        self.indent -= 1;
        self.pad();
        self.out.push('}');
    }

    /// Expression at statement level: no outer parentheses.
    fn top_expr(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Assign { op, target, value } => {
                self.expr(target);
                write!(self.out, " {} ", op.symbol()).unwrap();
                self.expr(value);
            }
            ExprKind::Cancel(t) => self.cancel(t),
            _ => self.expr(e),
        }
    }

    fn cancel(&mut self, t: &CancelTarget) {
        self.out.push_str("cancel ");
        match t {
            CancelTarget::All => self.out.push('*'),
            CancelTarget::Names { names } => {
                let names: Vec<_> = names.iter().map(|n| n.name.as_str()).collect();
                self.out.push_str(&names.join(", "));
            }
        }
    }

    fn expr_list(&mut self, es: &[Expr]) {
        for (i, e) in es.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.expr(e);
        }
    }

    fn expr(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Int { value } => write!(self.out, "{value}").unwrap(),
            ExprKind::Decimal { text } => self.out.push_str(text),
            ExprKind::Bool { value } => write!(self.out, "{value}").unwrap(),
            ExprKind::Char { value } => {
                write!(self.out, "'{}'", escape(&value.to_string(), '\'')).unwrap()
            }
            ExprKind::Str { value } => write!(self.out, "\"{}\"", escape(value, '"')).unwrap(),
            ExprKind::Timespan { value } => write!(self.out, "{value}").unwrap(),
            ExprKind::Null => self.out.push_str("null"),
            ExprKind::Ident { name } => self.out.push_str(name),
            ExprKind::SelfRef => self.out.push_str("self"),
            ExprKind::Member { object, field } => {
                self.expr(object);
                write!(self.out, ".{}", field.name).unwrap();
            }
            ExprKind::Index { object, index } => {
                self.expr(object);
                self.out.push('[');
                self.expr(index);
                self.out.push(']');
            }
            ExprKind::Call { callee, args } => {
                self.out.push_str(&callee.name);
                self.out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    if let Some(n) = &a.name {
                        write!(self.out, "{}:", n.name).unwrap();
                    }
                    self.expr(&a.value);
                }
                self.out.push(')');
            }
            ExprKind::Unary { op, operand } => {
                self.out.push('(');
                match op {
                    UnOp::PostInc | UnOp::PostDec => {
                        self.expr(operand);
                        self.out.push_str(op.symbol());
                    }
                    _ => {
                        self.out.push_str(op.symbol());
                        self.expr(operand);
                    }
                }
                self.out.push(')');
            }
            ExprKind::Binary { op, lhs, rhs } => {
                self.out.push('(');
                self.expr(lhs);
                write!(self.out, " {} ", op.symbol()).unwrap();
                self.expr(rhs);
                self.out.push(')');
            }
            ExprKind::Assign { .. } => {
                self.out.push('(');
                self.top_expr(e);
                self.out.push(')');
            }
            ExprKind::Cond { cond, then, els } => {
                self.out.push('(');
                self.expr(cond);
                self.out.push_str(" ? ");
                self.expr(then);
                self.out.push_str(" : ");
                self.expr(els);
                self.out.push(')');
            }
            ExprKind::Cast { operand, ty } => {
                self.out.push('(');
                self.expr(operand);
                self.out.push_str(" as ");
                self.ty(ty);
                self.out.push(')');
            }
            ExprKind::Collection { coll, elems } => {
                write!(self.out, "{}(", coll.keyword()).unwrap();
                self.expr_list(elems);
                self.out.push(')');
            }
            ExprKind::Map { entries } => {
                self.out.push_str("map(");
                for (i, (k, v)) in entries.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    self.expr(k);
                    self.out.push(':');
                    self.expr(v);
                }
                self.out.push(')');
            }
            ExprKind::Tuple { elems } => {
                self.out.push_str("tuple(");
                self.expr_list(elems);
                self.out.push(')');
            }
            ExprKind::Tell {
                receiver,
                event,
                args,
                with,
            } => {
                self.out.push('(');
                self.expr(receiver);
                write!(self.out, "!{}", event.name).unwrap();
                if let Some(a) = args {
                    self.out.push('(');
                    self.expr_list(a);
                    self.out.push(')');
                }
                if !with.is_empty() {
                    self.out.push_str(" with(");
                    for (i, w) in with.iter().enumerate() {
                        if i > 0 {
                            self.out.push_str(", ");
                        }
                        write!(self.out, "{}:", w.key.name).unwrap();
                        self.expr(&w.value);
                    }
                    self.out.push(')');
                }
                self.out.push(')');
            }
            ExprKind::Cancel(t) => {
                self.out.push('(');
                self.cancel(t);
                self.out.push(')');
            }
            ExprKind::Cases(c) => {
                self.out.push('(');
                self.cases(c);
                self.out.push(')');
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parser::parse_source;
    use crate::syntax::token::FileId;

    #[test]
    fn reparse_is_stable() {
        let src = r#"
const g:double = 9.81;
def E enum{A=0,B};
def C class[actor]{
    var[state] x:double = 0.5;
    do[every(10ms)] tick { x = -x * 2 + 1; self!tick() with(after:1s); }
    do stop { cancel *; }
}
main { var c:actor = C(x: 1.0); }
"#;
        let (p1, e1) = parse_source(src, FileId(0));
        assert!(e1.is_empty(), "{e1:?}");
        let printed = print_program(&p1);
        let (p2, e2) = parse_source(&printed, FileId(0));
        assert!(e2.is_empty(), "{e2:?}\n{printed}");
        assert_eq!(print_program(&p2), printed);
    }
}
