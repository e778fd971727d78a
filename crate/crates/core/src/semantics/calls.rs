//! Calls, instantiation, host functions, `tell` and `cancel`.

use super::ir::*;
use super::{Checker, Ctx};
use crate::syntax::ast::{Arg, CancelTarget, ClassMember, Expr, ExprKind, Ident, RefKind, TypeDeclBody, WithItem};
use crate::syntax::token::Span;
use crate::types::{unify, Type, TypeDef, TypeEntry};
use std::collections::HashMap;

impl<'a> Checker<'a> {
    /// Orders call arguments by parameter. Positional arguments fill from
    /// the left, named ones by name. `None` marks a missing argument.
    fn bind_args<'e>(&mut self, what: &str, params: &[String], args: &'e [Arg], span: Span, rule: &'static str) -> Option<Vec<Option<&'e Expr>>> {
        let mut out: Vec<Option<&Expr>> = vec![None; params.len()];
        let mut next = 0;
        let mut ok = true;
        for a in args {
            let pos = match &a.name {
                None => {
                    let p = next;
                    next += 1;
                    if p >= params.len() {
                        self.error(a.value.span, rule, format!("{what} takes {} arguments", params.len()));
                        ok = false;
                        continue;
                    }
                    p
                }
                Some(n) => match params.iter().position(|p| *p == n.name) {
                    Some(p) => p,
                    None => {
                        self.error(n.span, rule, format!("{what} has no parameter `{}`", n.name));
                        ok = false;
                        continue;
                    }
                },
            };
            if out[pos].is_some() {
                self.error(a.value.span, rule, format!("argument `{}` of {what} is given twice", params[pos]));
                ok = false;
                continue;
            }
            out[pos] = Some(&a.value);
        }
        if !ok {
            let _ = span;
            return None;
        }
        Some(out)
    }

    pub(crate) fn call(&mut self, callee: &Ident, args: &[Arg], span: Span) -> TExpr {
        let name = callee.name.as_str();
        if let Some(ci) = self.frame.class {
            if let Some(fi) = self.classes[ci].functions.iter().position(|f| f.name == name) {
                let f = self.classes[ci].functions[fi].clone();
                return self.call_function(FnRef::Class(ci, fi), &f, args, span);
            }
        }
        if let Some(&fi) = self.function_index.get(name) {
            let f = self.functions[fi].clone();
            return self.call_function(FnRef::Global(fi), &f, args, span);
        }
        if let Some(TypeEntry::Def(id)) = self.reg.lookup(name).cloned() {
            match self.reg.get(id).clone() {
                TypeDef::Class { index, .. } => return self.instantiate(index, args, span),
                TypeDef::Record { fields, .. } => {
                    let names: Vec<String> = fields.iter().map(|(n, _)| n.clone()).collect();
                    let types: Vec<Type> = fields.iter().map(|(_, t)| t.clone()).collect();
                    let Some(bound) = self.bind_args(&format!("record `{name}`"), &names, args, span, "recordval") else {
                        return Self::bad(span);
                    };
                    let mut vals = Vec::new();
                    for ((n, t), a) in names.iter().zip(&types).zip(bound) {
                        let Some(a) = a else {
                            self.error(span, "recordval", format!("record `{name}` needs a value for `{n}`"));
                            return Self::bad(span);
                        };
                        let e = self.expr(a, Some(t));
                        vals.push(self.coerce(e, t, "recordval"));
                    }
                    return self.node(TExprKind::RecordLit { ty: id, fields: vals }, Type::Named(id), "recordval", span);
                }
                TypeDef::Tuple { elems, .. } => {
                    if args.iter().any(|a| a.name.is_some()) || args.len() != elems.len() {
                        self.error(span, "tupleval-def", format!("tuple `{name}` takes {} positional values", elems.len()));
                        return Self::bad(span);
                    }
                    let mut vals = Vec::new();
                    for (a, t) in args.iter().zip(&elems) {
                        let e = self.expr(&a.value, Some(t));
                        vals.push(self.coerce(e, t, "tupleval-def"));
                    }
                    return self.node(TExprKind::TupleLit { ty: Some(id), elems: vals }, Type::Named(id), "tupleval-def", span);
                }
                TypeDef::Enum(_) => {
                    self.error(span, "call-ref", format!("enum `{name}` cannot be called; use `{name}.<constant>` or `as`"));
                    return Self::bad(span);
                }
            }
        }
        self.external_call(callee, args, span)
    }

    fn call_function(&mut self, func: FnRef, f: &FunctionInfo, args: &[Arg], span: Span) -> TExpr {
        let names: Vec<String> = f.params.iter().map(|(n, _)| n.clone()).collect();
        let Some(bound) = self.bind_args(&format!("function `{}`", f.name), &names, args, span, "call-ref") else {
            return Self::bad(span);
        };
        let mut out = Vec::new();
        for ((pname, pty), a) in f.params.iter().zip(bound) {
            let Some(a) = a else {
                self.error(span, "call-ref", format!("missing argument `{pname}` of function `{}`", f.name));
                return Self::bad(span);
            };
            let e = self.expr(a, Some(pty));
            out.push(self.coerce(e, pty, "call-ref"));
        }
        self.node(TExprKind::Call { func, args: out }, f.ret.clone(), "call-ref", span)
    }

    /// Whether field `fi` of class `ci` has an initializer in the source.
    fn field_has_default(&self, ci: usize, name: &str) -> bool {
        let span = self.classes[ci].span;
        let program = self.program;
        program
            .types
            .iter()
            .filter(|d| d.span == span)
            .filter_map(|d| match &d.body {
                TypeDeclBody::Class(c) => Some(c),
                _ => None,
            })
            .flat_map(|c| c.members.iter())
            .any(|m| matches!(m, ClassMember::Var { decl, .. } if decl.name.name == name && decl.init.is_some()))
    }

    fn instantiate(&mut self, ci: usize, args: &[Arg], span: Span) -> TExpr {
        let prealloc = self.prealloc_hint.take();
        let class = self.classes[ci].clone();
        if matches!(self.frame.ctx, Ctx::Const | Ctx::Condition) {
            self.error(span, "classval", format!("`{}` cannot be instantiated here", class.name));
            return Self::bad(span);
        }
        let names: Vec<String> = class.fields.iter().map(|f| f.name.clone()).collect();
        let Some(bound) = self.bind_args(&format!("class `{}`", class.name), &names, args, span, "classval") else {
            return Self::bad(span);
        };
        let mut out = Vec::new();
        for (f, a) in class.fields.iter().zip(bound) {
            match a {
                Some(a) => {
                    let e = self.expr(a, Some(&f.ty));
                    out.push(Some(self.coerce(e, &f.ty, "classval")));
                }
                None => {
                    if is_ref_type(&f.ty, &self.reg) && !self.field_has_default(ci, &f.name) {
                        self.error(
                            span,
                            "classval",
                            format!("reference field `{}` of `{}` has no default and must be given", f.name, class.name),
                        );
                    }
                    out.push(None);
                }
            }
        }
        let kind = TExprKind::Instantiate { class: ci, args: out, prealloc };
        self.node(kind, Type::Named(class.type_id), "classval", span)
    }

    /// Quietly tries to resolve `e` as a storage location.
    fn try_lvalue(&mut self, e: &Expr) -> Option<LValue> {
        if !matches!(e.kind, ExprKind::Ident { .. } | ExprKind::Member { .. } | ExprKind::Index { .. }) {
            return None;
        }
        let n = self.diags.len();
        let lv = self.lvalue(e).map(|(lv, _)| lv);
        self.diags.truncate(n);
        lv
    }

    fn external_call(&mut self, callee: &Ident, args: &[Arg], span: Span) -> TExpr {
        let name = callee.name.as_str();
        let arity = args.len();
        let Some(ext) = self.externals.iter().find(|e| e.name == name && e.params.len() == arity).cloned() else {
            let arities: Vec<usize> = self.externals.iter().filter(|e| e.name == name).map(|e| e.params.len()).collect();
            if arities.is_empty() {
                self.error(callee.span, "call-ref", format!("unknown function `{name}`"));
            } else {
                self.error(callee.span, "call-ref", format!("`{name}` does not take {arity} arguments"));
            }
            return Self::bad(span);
        };
        if let Some(a) = args.iter().find_map(|a| a.name.as_ref()) {
            self.error(a.span, "call-ref", format!("external `{name}` takes positional arguments only"));
            return Self::bad(span);
        }
        match name {
            "now" => return self.node(TExprKind::Now, Type::Double, "call-ref", span),
            "prev" => return self.prev_call(&args[0].value, span),
            _ => {}
        }
        let mut typed: Vec<TExpr> = Vec::new();
        let mut bind: HashMap<String, Type> = HashMap::new();
        for ((pname, pty), a) in ext.params.iter().zip(args) {
            match pty {
                SigType::Concrete(t) => {
                    let e = self.expr(&a.value, Some(t));
                    typed.push(self.coerce(e, t, "call-ref"));
                }
                SigType::Placeholder(p) => {
                    let e = self.expr(&a.value, None);
                    if e.ty.is_error() {
                        return Self::bad(span);
                    }
                    let merged = match bind.get(p) {
                        Some(b) => match unify(b, &e.ty, &self.reg) {
                            Some(u) => u,
                            None => {
                                let (x, y) = (self.show(b), self.show(&e.ty));
                                self.error(a.value.span, "call-ref", format!("argument `{pname}` of `{name}`: #{p} is both {x} and {y}"));
                                return Self::bad(span);
                            }
                        },
                        None => e.ty.clone(),
                    };
                    bind.insert(p.clone(), merged);
                    typed.push(e);
                }
            }
        }
        if typed.iter().any(|e| e.ty.is_error()) {
            return Self::bad(span);
        }
        // arguments sharing a placeholder meet at their common type
        for (i, (_, pty)) in ext.params.iter().enumerate() {
            if let SigType::Placeholder(p) = pty {
                let t = bind[p].clone();
                let e = std::mem::replace(&mut typed[i], Self::bad(span));
                typed[i] = self.coerce(e, &t, "call-ref");
            }
        }
        let ret = match self.builtin_result(name, &mut typed, span) {
            Ok(Some(t)) => t,
            Ok(None) => match &ext.ret {
                SigType::Concrete(t) => t.clone(),
                SigType::Placeholder(p) => match bind.get(p) {
                    Some(t) => t.clone(),
                    None => {
                        self.error(span, "call-ref", format!("cannot infer the result type #{p} of `{name}`"));
                        return Self::bad(span);
                    }
                },
            },
            Err(()) => return Self::bad(span),
        };
        let write_back = match name {
            "add" | "push_back" | "removeAt" => self.try_lvalue(&args[0].value).map(Box::new),
            _ => None,
        };
        if let Some(lv) = &write_back {
            if typed[0].ty.contains_any() && !ret.contains_any() {
                self.rules.insert("assign-any");
                self.set_lvalue_type(lv, ret.clone());
            }
        }
        self.node(TExprKind::External { name: name.to_string(), args: typed, write_back }, ret, "call-ref", span)
    }

    /// Result types of host functions whose signature alone cannot express
    /// them. `Ok(None)` defers to the declared signature.
    fn builtin_result(&mut self, name: &str, args: &mut [TExpr], span: Span) -> Result<Option<Type>, ()> {
        let int = Type::default_int();
        let a0 = args.first().map(|e| e.ty.clone()).unwrap_or(Type::Void);
        let fail = |this: &mut Self, what: &str| {
            let shown = this.show(&a0);
            this.error(span, "call-ref", format!("`{name}` {what}, found {shown}"));
            Err(())
        };
        match name {
            "length" => match &a0 {
                Type::Array(..) | Type::List(_) | Type::Set(_) | Type::Map(..) | Type::Str | Type::Tuple(_) => Ok(Some(int)),
                t if self.reg.positional(t).is_some() => Ok(Some(int)),
                _ => fail(self, "needs a collection or string"),
            },
            "keys" => match &a0 {
                Type::Map(k, _) => Ok(Some(Type::List(k.clone()))),
                Type::Array(..) | Type::List(_) | Type::Set(_) => Ok(Some(Type::List(Box::new(int)))),
                _ => fail(self, "needs a collection"),
            },
            "values" => match &a0 {
                Type::Map(_, v) => Ok(Some(Type::List(v.clone()))),
                Type::Array(e, _) | Type::List(e) | Type::Set(e) => Ok(Some(Type::List(e.clone()))),
                _ => fail(self, "needs a collection"),
            },
            "pairs" | "entries" => match &a0 {
                Type::Map(k, v) => Ok(Some(Type::List(Box::new(Type::Tuple(vec![(**k).clone(), (**v).clone()]))))),
                Type::Array(e, _) | Type::List(e) | Type::Set(e) => {
                    Ok(Some(Type::List(Box::new(Type::Tuple(vec![int, (**e).clone()])))))
                }
                _ => fail(self, "needs a collection"),
            },
            "add" | "push_back" | "contains" => {
                let elem = match &a0 {
                    Type::Array(e, _) | Type::List(e) | Type::Set(e) => (**e).clone(),
                    Type::Map(k, _) if name == "contains" => (**k).clone(),
                    Type::Str if name == "contains" => Type::Str,
                    _ => return fail(self, "needs an array, list or set"),
                };
                let e = std::mem::replace(&mut args[1], Self::bad(span));
                let e = if elem.contains_any() {
                    e
                } else {
                    self.coerce(e, &elem, "call-ref")
                };
                let refined = if elem.contains_any() && !e.ty.is_error() {
                    Some(e.ty.clone())
                } else {
                    None
                };
                args[1] = e;
                if name == "contains" {
                    return Ok(Some(Type::Bool));
                }
                Ok(Some(match (a0.clone(), refined) {
                    (Type::Array(_, _), Some(t)) => Type::Array(Box::new(t), None),
                    (Type::List(_), Some(t)) => Type::List(Box::new(t)),
                    (Type::Set(_), Some(t)) => Type::Set(Box::new(t)),
                    (Type::Array(e, _), None) => Type::Array(e, None),
                    (t, _) => t,
                }))
            }
            "removeAt" | "reverse" => match &a0 {
                Type::Array(e, n) => Ok(Some(Type::Array(e.clone(), if name == "reverse" { *n } else { None }))),
                Type::List(_) | Type::Str => Ok(Some(a0.clone())),
                Type::Set(_) if name == "removeAt" => Ok(Some(a0.clone())),
                _ => fail(self, "needs an array or list"),
            },
            "abs" | "min" | "max" => {
                if a0.is_numeric() || a0 == Type::Timespan {
                    Ok(Some(a0.clone()))
                } else {
                    fail(self, "needs numeric arguments")
                }
            }
            _ => Ok(None),
        }
    }

    fn prev_call(&mut self, arg: &Expr, span: Span) -> TExpr {
        let name = match &arg.kind {
            ExprKind::Ident { name } if self.lookup_local(name).is_none() => Some(name.clone()),
            ExprKind::Member { object, field } if matches!(object.kind, ExprKind::SelfRef) => Some(field.name.clone()),
            _ => None,
        };
        let found = name.as_ref().and_then(|n| {
            let ci = self.frame.class?;
            let fi = self.classes[ci].field_index(n)?;
            Some((fi, self.classes[ci].fields[fi].clone()))
        });
        match found {
            Some((fi, f)) if f.state => self.node(TExprKind::Prev(fi), f.ty, "call-ref", span),
            Some((_, f)) => {
                self.error(arg.span, "call-ref", format!("`prev` needs a state variable; declare `var[state] {}`", f.name));
                Self::bad(span)
            }
            None => {
                self.error(arg.span, "call-ref", "`prev` takes a state variable of the enclosing class");
                Self::bad(span)
            }
        }
    }

    pub(crate) fn tell(&mut self, receiver: &Expr, event: &Ident, args: Option<&[Expr]>, with: &[WithItem], span: Span) -> TExpr {
        match self.frame.ctx {
            Ctx::Main => {
                self.error(span, "tell", "messages cannot be sent from the main block; use `initialize`");
                return Self::bad(span);
            }
            Ctx::Response | Ctx::Function => {}
            _ => {
                self.error(span, "tell", "messages can only be sent from event responses and functions");
                return Self::bad(span);
            }
        }
        let recv = self.expr(receiver, None);
        let target = match &recv.ty {
            Type::Error => return Self::bad(span),
            Type::ActorRef | Type::ConnectionRef => None,
            t => match self.reg.class_kind(t) {
                Some(RefKind::Actor | RefKind::Connection) => self.reg.class_index(t),
                _ => {
                    let shown = self.show(t);
                    self.error(receiver.span, "tell", format!("message receiver must be an actor, found {shown}"));
                    return Self::bad(span);
                }
            },
        };
        let args = args.unwrap_or(&[]);
        let mut typed = Vec::new();
        match target {
            Some(ci) => {
                let cname = self.classes[ci].name.clone();
                let Some(r) = self.classes[ci].response(&event.name).cloned() else {
                    self.error(event.span, "tell", format!("class `{cname}` has no event response `{}`", event.name));
                    return Self::bad(span);
                };
                if r.params.len() != args.len() {
                    self.error(
                        span,
                        "tell",
                        format!("`{cname}.{}` takes {} arguments, {} given", event.name, r.params.len(), args.len()),
                    );
                    return Self::bad(span);
                }
                for ((_, t), a) in r.params.iter().zip(args) {
                    let e = self.expr(a, Some(t));
                    typed.push(self.coerce(e, t, "tell"));
                }
            }
            None => {
                for a in args {
                    typed.push(self.expr(a, None));
                }
            }
        }
        let mut items: Vec<(String, TExpr)> = Vec::new();
        for w in with {
            let key = w.key.name.clone();
            if items.iter().any(|(k, _)| *k == key) {
                self.error(w.key.span, "tell", format!("`{key}` appears twice in `with`"));
                continue;
            }
            let e = match key.as_str() {
                "after" | "deadline" => {
                    let e = self.expr(&w.value, Some(&Type::Timespan));
                    self.coerce(e, &Type::Timespan, "tell")
                }
                "sender" => {
                    let e = self.expr(&w.value, None);
                    self.coerce(e, &Type::ActorRef, "tell")
                }
                "t_send" | "t_assume" => {
                    self.error(w.key.span, "tell", format!("`{key}` is set by the runtime"));
                    continue;
                }
                _ => {
                    let e = self.expr(&w.value, None);
                    if !e.ty.is_error() {
                        let merged = match self.with_keys.get(&key) {
                            Some(prev) => unify(prev, &e.ty, &self.reg),
                            None => Some(e.ty.clone()),
                        };
                        match merged {
                            Some(t) => {
                                self.with_keys.insert(key.clone(), t);
                            }
                            None => {
                                let (a, b) = (self.show(&self.with_keys[&key]), self.show(&e.ty));
                                self.error(w.value.span, "tell", format!("message key `{key}` is used with types {a} and {b}"));
                            }
                        }
                    }
                    e
                }
            };
            items.push((key, e));
        }
        let kind = TExprKind::Tell { receiver: Box::new(recv), event: event.name.clone(), args: typed, with: items };
        self.node(kind, Type::Bool, "tell", span)
    }

    pub(crate) fn cancel(&mut self, target: &CancelTarget, span: Span) -> TExpr {
        let ci = match (self.frame.class, self.frame.ctx) {
            (Some(ci), Ctx::Response | Ctx::Function) => ci,
            _ => {
                self.error(span, "cancel-all", "`cancel` is only allowed inside an actor's responses and functions");
                return Self::bad(span);
            }
        };
        match target {
            CancelTarget::All => self.node(TExprKind::Cancel(None), Type::Bool, "cancel-all", span),
            CancelTarget::Names { names } => {
                let mut out = Vec::new();
                for n in names {
                    if self.classes[ci].response(&n.name).is_none() {
                        let cname = self.classes[ci].name.clone();
                        self.error(n.span, "cancel-names", format!("class `{cname}` has no event response `{}`", n.name));
                    }
                    out.push(n.name.clone());
                }
                self.node(TExprKind::Cancel(Some(out)), Type::Bool, "cancel-names", span)
            }
        }
    }
}

fn is_ref_type(t: &Type, reg: &crate::types::TypeRegistry) -> bool {
    crate::types::is_reference(t, reg)
}
