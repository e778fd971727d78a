//! Typing of statements and blocks.

use super::ir::*;
use super::Checker;
use crate::syntax::ast::{Block, CasesBody, IterFn, Stmt, StmtKind, VarDecl};
use crate::syntax::token::Span;
use crate::types::{coercible, unify, Type};
use crate::value::Value;

impl<'a> Checker<'a> {
    /// Checks a block in a new scope.
    pub fn block(&mut self, b: &Block) -> TBlock {
        self.frame.scopes.push(Vec::new());
        let out = self.seq(&b.stmts);
        self.check_resolved(self.frame.scopes.len() - 1);
        self.frame.scopes.pop();
        out
    }

    /// Checks a block in the current scope.
    pub fn block_in_scope(&mut self, b: &Block) -> TBlock {
        self.seq(&b.stmts)
    }

    /// Reports locals of scope `depth` whose type still contains `any`.
    pub(crate) fn check_resolved(&mut self, depth: usize) {
        let scope = self.frame.scopes[depth].clone();
        for (name, slot) in scope {
            let l = &self.frame.locals[slot];
            if l.ty.contains_any() {
                let (span, shown) = (l.span, self.show(&l.ty));
                self.error(span, "assign-any", format!("type of `{name}` is still unresolved ({shown}); assign it a value"));
            }
        }
    }

    /// Types a statement sequence: the last non-`any` statement type, cut
    /// short by `return` and `break`.
    fn seq(&mut self, stmts: &[Stmt]) -> TBlock {
        let mut out = Vec::new();
        let mut ty = Type::Any;
        let mut rule = "seq-any";
        let mut ended = false;
        for s in stmts {
            if ended {
                self.warning(s.span, "seq-nonany", "unreachable statement");
                self.stmt(s);
                continue;
            }
            let t = self.stmt(s);
            match t.kind {
                TStmtKind::Return(_) => {
                    ty = t.ty.clone();
                    rule = t.rule;
                    ended = true;
                }
                TStmtKind::Break => {
                    rule = "break-any";
                    ended = true;
                }
                _ if t.ty != Type::Any => {
                    ty = t.ty.clone();
                    rule = "seq-nonany";
                }
                _ => rule = if ty == Type::Any { "seq-any" } else { rule },
            }
            out.push(t);
        }
        self.rules.insert(rule);
        TBlock { stmts: out, ty, rule }
    }

    fn tstmt(&mut self, kind: TStmtKind, ty: Type, rule: &'static str, span: Span) -> TStmt {
        self.rules.insert(rule);
        TStmt { kind, ty, rule, span }
    }

    fn stmt(&mut self, s: &Stmt) -> TStmt {
        let span = s.span;
        match &s.kind {
            StmtKind::Var(v) => self.var_decl(v),
            StmtKind::Const(c) => {
                if self.frame.scopes.last().unwrap().iter().any(|(n, _)| *n == c.name.name) {
                    self.error(c.name.span, "var-decl", format!("`{}` is already declared in this scope", c.name.name));
                }
                let (ty, value) = self.const_value(c);
                let init = self.node(TExprKind::Const(value.clone()), ty.clone(), "var-decl", c.value.span);
                let slot = self.declare(&c.name.name, ty, Some(value), c.name.span);
                self.tstmt(TStmtKind::Let { slot, init }, Type::Any, "var-decl", span)
            }
            StmtKind::Expr { expr } => {
                let e = self.expr(expr, None);
                let rule = e.rule;
                self.tstmt(TStmtKind::Expr(e), Type::Any, rule, span)
            }
            StmtKind::Return { value } => self.return_stmt(value.as_ref(), span),
            StmtKind::Break => {
                if self.frame.loops == 0 {
                    self.error(span, "break-any", "`break` outside a loop");
                }
                self.tstmt(TStmtKind::Break, Type::Any, "break-any", span)
            }
            StmtKind::If { cond, then, els } => {
                let c = self.expr(cond, Some(&Type::Bool));
                let c = self.coerce(c, &Type::Bool, "if-undecided");
                let t = self.block(then);
                let e = els.as_ref().map(|b| self.block(b));
                let (ty, rule) = match (self.fold_value(&c), &e) {
                    (Some(Value::Bool(true)), _) => (t.ty.clone(), "if-true"),
                    (Some(Value::Bool(false)), Some(b)) => (b.ty.clone(), "ifelse-false"),
                    (Some(Value::Bool(false)), None) => (Type::Any, "if-false"),
                    _ => (Type::Any, "if-undecided"),
                };
                self.tstmt(TStmtKind::If { cond: c, then: t, els: e }, ty, rule, span)
            }
            StmtKind::While { cond, body } => {
                let c = self.expr(cond, Some(&Type::Bool));
                let c = self.coerce(c, &Type::Bool, "while-nottrue");
                let b = self.loop_body(body);
                let (ty, rule) = self.while_type(&c, &b);
                self.tstmt(TStmtKind::While { cond: c, body: b }, ty, rule, span)
            }
            StmtKind::DoWhile { body, cond } => {
                let b = self.loop_body(body);
                let c = self.expr(cond, Some(&Type::Bool));
                let c = self.coerce(c, &Type::Bool, "while-nottrue");
                let (ty, rule) = self.while_type(&c, &b);
                self.tstmt(TStmtKind::DoWhile { body: b, cond: c }, ty, rule, span)
            }
            StmtKind::Foreach { vars, iter, iter_name, collection, body } => {
                self.foreach(vars, *iter, iter_name, collection, body, span)
            }
            StmtKind::Cases(body) => {
                let (c, ty, rule) = self.cases(body, None, span);
                self.tstmt(TStmtKind::Cases(c), ty, rule, span)
            }
        }
    }

    fn loop_body(&mut self, body: &Block) -> TBlock {
        self.frame.loops += 1;
        let b = self.block(body);
        self.frame.loops -= 1;
        b
    }

    fn while_type(&mut self, c: &TExpr, b: &TBlock) -> (Type, &'static str) {
        match self.fold_value(c) {
            Some(Value::Bool(true)) => (b.ty.clone(), "while-true"),
            _ => (Type::Any, "while-nottrue"),
        }
    }

    fn var_decl(&mut self, v: &VarDecl) -> TStmt {
        let mut ty = self.resolve_type(&v.ty);
        let name = &v.name.name;
        let pre = if self.frame.scopes.len() == 1 { self.frame.prealloc.get(&v.span.offset).copied() } else { None };
        if pre.is_none() && self.frame.scopes.last().unwrap().iter().any(|(n, _)| n == name) {
            self.error(v.name.span, "var-decl", format!("`{name}` is already declared in this scope"));
        }
        if let Some(ci) = self.frame.class {
            if self.classes[ci].fields.iter().any(|f| f.name == *name && f.state) {
                self.warning(v.name.span, "var-decl", format!("local `{name}` shadows state variable `{name}`"));
            }
        }
        let (init, rule) = match &v.init {
            Some(e) => {
                self.prealloc_hint = pre;
                let t = if ty.contains_any() {
                    let t = self.expr(e, None);
                    if !t.ty.is_error() {
                        ty = self.refine(&ty, &t.ty, e.span);
                    }
                    self.coerce(t, &ty, "var-decl")
                } else {
                    let t = self.expr(e, Some(&ty));
                    self.coerce(t, &ty, "var-decl")
                };
                self.prealloc_hint = None;
                (t, "var-decl")
            }
            None => {
                let zero = Value::zero(&ty, &self.reg);
                (self.node(TExprKind::Const(zero), ty.clone(), "var-decl-novalue", v.span), "var-decl-novalue")
            }
        };
        let slot = match pre {
            Some(slot) => {
                self.frame.locals[slot].ty = ty;
                slot
            }
            None => self.declare(name, ty, None, v.name.span),
        };
        self.tstmt(TStmtKind::Let { slot, init }, Type::Any, rule, v.span)
    }

    fn return_stmt(&mut self, value: Option<&crate::syntax::ast::Expr>, span: Span) -> TStmt {
        let ret = self.frame.ret.clone();
        match (value, ret) {
            (Some(e), Some(r)) => {
                if r == Type::Void {
                    self.error(span, "return", "this function returns no value");
                    let t = self.expr(e, None);
                    return self.tstmt(TStmtKind::Return(Some(t)), Type::Error, "return", span);
                }
                let t = self.expr(e, Some(&r));
                let t = self.coerce(t, &r, "return");
                let ty = t.ty.clone();
                self.tstmt(TStmtKind::Return(Some(t)), ty, "return", span)
            }
            (Some(e), None) => {
                self.error(span, "return", "only functions can return a value");
                let t = self.expr(e, None);
                self.tstmt(TStmtKind::Return(Some(t)), Type::Error, "return", span)
            }
            (None, Some(r)) if r != Type::Void => {
                let shown = self.show(&r);
                self.error(span, "return-any", format!("`return` needs a value of type {shown}"));
                self.tstmt(TStmtKind::Return(None), Type::Any, "return-any", span)
            }
            (None, _) => self.tstmt(TStmtKind::Return(None), Type::Any, "return-any", span),
        }
    }

    fn foreach(
        &mut self,
        vars: &[crate::syntax::ast::LoopVar],
        iter: IterFn,
        iter_name: &str,
        collection: &crate::syntax::ast::Expr,
        body: &Block,
        span: Span,
    ) -> TStmt {
        let coll = self.expr(collection, None);
        let (rule, bound): (&'static str, Option<Vec<Type>>) = match iter {
            IterFn::Keys => (
                "foreach-keys",
                match &coll.ty {
                    Type::Array(..) | Type::List(_) | Type::Set(_) => Some(vec![Type::default_int()]),
                    Type::Map(k, _) => Some(vec![(**k).clone()]),
                    _ => None,
                },
            ),
            IterFn::Values => (
                "foreach-values",
                match &coll.ty {
                    Type::Array(e, _) | Type::List(e) | Type::Set(e) | Type::Map(_, e) => Some(vec![(**e).clone()]),
                    _ => None,
                },
            ),
            IterFn::Pairs => (
                "foreach-pairs",
                match &coll.ty {
                    Type::Map(k, v) => Some(vec![(**k).clone(), (**v).clone()]),
                    _ => None,
                },
            ),
        };
        let bound = match bound {
            Some(b) => b,
            None => {
                if !coll.ty.is_error() {
                    let shown = self.show(&coll.ty);
                    self.error(collection.span, rule, format!("`{iter_name}` cannot iterate over {shown}"));
                }
                vec![Type::Error; vars.len()]
            }
        };
        if bound.len() != vars.len() {
            self.error(span, rule, format!("`{iter_name}` binds {} loop variable(s), {} given", bound.len(), vars.len()));
        }
        self.frame.scopes.push(Vec::new());
        let mut slots = Vec::new();
        let mut var_types = Vec::new();
        for (i, v) in vars.iter().enumerate() {
            let got = bound.get(i).cloned().unwrap_or(Type::Error);
            let ty = match &v.ty {
                Some(te) => {
                    let declared = self.resolve_type(te);
                    if !coercible(&got, &declared, &self.reg) {
                        let (a, b) = (self.show(&got), self.show(&declared));
                        self.error(v.name.span, rule, format!("loop variable `{}` is {b} but the items are {a}", v.name.name));
                    }
                    declared
                }
                None => got,
            };
            var_types.push(ty.clone());
            slots.push(self.declare(&v.name.name, ty, None, v.name.span));
        }
        let b = self.loop_body(body);
        self.frame.scopes.pop();
        let ty = b.ty.clone();
        self.tstmt(TStmtKind::Foreach { iter, collection: coll, slots, var_types, body: b }, ty, rule, span)
    }

    /// Checks an arm body in its own scope.
    fn arm(&mut self, stmts: &[Stmt]) -> TBlock {
        self.frame.scopes.push(Vec::new());
        let b = self.seq(stmts);
        self.check_resolved(self.frame.scopes.len() - 1);
        self.frame.scopes.pop();
        b
    }

    /// Shared by the statement and expression forms. For the expression
    /// form `value` receives the type every arm's trailing expression is
    /// coerced to.
    fn cases(&mut self, body: &CasesBody, value: Option<Option<&Type>>, span: Span) -> (TCases, Type, &'static str) {
        let sel = self.expr(&body.selector, None);
        let mut arms = Vec::new();
        for a in &body.arms {
            let v = self.expr(&a.value, Some(&sel.ty));
            let v = self.coerce(v, &sel.ty, "cases-one");
            let b = self.arm(&a.body);
            arms.push((v, b));
        }
        let mut otherwise = body.otherwise.as_ref().map(|o| self.arm(o));
        let selected = match self.fold_value(&sel) {
            Some(sv) => {
                let hit = arms.iter().position(|(v, _)| v.constant() == Some(&sv));
                Some(hit)
            }
            None => None,
        };
        let Some(_) = value else {
            let (ty, rule) = match selected {
                Some(Some(i)) => (arms[i].1.ty.clone(), "cases-one"),
                Some(None) => (otherwise.as_ref().map(|b| b.ty.clone()).unwrap_or(Type::Any), "cases-other"),
                None => (Type::Any, "cases-undecided"),
            };
            self.rules.insert(rule);
            return (TCases { selector: sel, arms, otherwise }, ty, rule);
        };
        // value form: arms yield their trailing expression
        let mut tys: Vec<Type> = arms.iter().map(|(_, b)| trailing_type(b)).collect();
        if let Some(o) = &otherwise {
            tys.push(trailing_type(o));
        }
        let mut acc = Type::Any;
        for t in &tys {
            match unify(&acc, t, &self.reg) {
                Some(u) => acc = u,
                None => {
                    let (a, b) = (self.show(&acc), self.show(t));
                    self.error(span, "cases-undecided", format!("cases arms yield incompatible types {a} and {b}"));
                    acc = Type::Error;
                    break;
                }
            }
        }
        if let Some(Some(want)) = value {
            if !acc.is_error() && coercible(&acc, want, &self.reg) {
                acc = want.clone();
            }
        }
        if !acc.is_error() && acc != Type::Any {
            for (_, b) in arms.iter_mut() {
                self.coerce_trailing(b, &acc);
            }
            if let Some(o) = otherwise.as_mut() {
                self.coerce_trailing(o, &acc);
            }
        }
        let (ty, rule) = match selected {
            Some(Some(i)) => (trailing_type(&arms[i].1), "cases-one"),
            Some(None) => (otherwise.as_ref().map(trailing_type).unwrap_or(Type::Any), "cases-other"),
            None => (acc.clone(), "cases-undecided"),
        };
        let ty = if ty != Type::Any && !acc.is_error() && acc != Type::Any { acc } else { ty };
        self.rules.insert(rule);
        (TCases { selector: sel, arms, otherwise }, ty, rule)
    }

    fn coerce_trailing(&mut self, b: &mut TBlock, to: &Type) {
        if let Some(TStmt { kind: TStmtKind::Expr(e), .. }) = b.stmts.last_mut() {
            if e.ty != Type::Void {
                let taken = std::mem::replace(e, Self::bad(e.span));
                *e = self.coerce(taken, to, "cases-undecided");
            }
        }
    }

    pub(crate) fn cases_expr(&mut self, body: &CasesBody, expected: Option<&Type>, span: Span) -> TExpr {
        let (c, ty, rule) = self.cases(body, Some(expected), span);
        self.node(TExprKind::Cases(Box::new(c)), ty, rule, span)
    }
}

/// Type a `cases` arm yields as a value: its trailing expression, if any.
fn trailing_type(b: &TBlock) -> Type {
    match b.stmts.last() {
        Some(TStmt { kind: TStmtKind::Expr(e), .. }) if e.ty != Type::Void => e.ty.clone(),
        Some(TStmt { kind: TStmtKind::Return(Some(e)), .. }) => e.ty.clone(),
        _ => Type::Any,
    }
}
