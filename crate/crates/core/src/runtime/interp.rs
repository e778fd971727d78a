//! Tree-walking evaluation of typed bodies inside one reaction.

use super::externals::{self, HostCtx};
use super::queue::Message;
use super::System;
use crate::ops;
use crate::semantics::ir::*;
use crate::syntax::ast::{BinOp, CollectionKind, IterFn, RefKind};
use crate::syntax::token::Span;
use crate::types::timespan::decimal_to_f64;
use crate::types::{convert, ConvCtx, Type};
use crate::value::{ObjectData, Value};
use rust_decimal::Decimal;
use std::cell::RefCell;
use std::rc::Rc;

const MAX_CALL_DEPTH: usize = 200;

#[derive(Debug, Clone)]
pub(crate) struct Fault {
    pub message: String,
    pub span: Option<Span>,
}

type R<T> = Result<T, Fault>;

fn fail<T>(message: impl Into<String>, span: Span) -> R<T> {
    Err(Fault { message: message.into(), span: Some(span) })
}

trait At<T> {
    fn at(self, span: Span) -> R<T>;
}

impl<T> At<T> for Result<T, String> {
    fn at(self, span: Span) -> R<T> {
        self.map_err(|message| Fault { message, span: Some(span) })
    }
}

pub(crate) enum Flow {
    Normal(Value),
    Return(Value),
    Break,
}

enum Root {
    Local(Slot),
    Field(usize),
    Object(Rc<RefCell<ObjectData>>, usize),
}

enum Step {
    Index(Value, IndexMode),
    Member(usize),
}

pub(crate) struct Exec<'a, 'm> {
    sys: &'a mut System<'m>,
    actor: Option<u32>,
    class: Option<usize>,
    message: Option<&'a Message>,
    locals: Vec<Value>,
    /// Fields of an instance under construction.
    building: Option<Vec<Value>>,
    depth: usize,
}

impl<'a, 'm> Exec<'a, 'm> {
    pub fn new(
        sys: &'a mut System<'m>,
        actor: Option<u32>,
        class: Option<usize>,
        message: Option<&'a Message>,
        locals: Vec<Value>,
    ) -> Self {
        Exec { sys, actor, class, message, locals, building: None, depth: 0 }
    }

    fn model(&self) -> &'m Model {
        self.sys.model
    }

    fn cx(&self) -> ConvCtx<'m> {
        ConvCtx { reg: &self.sys.model.registry, unit_ms: self.sys.model.sim_time_unit_ms }
    }

    fn field(&self, i: usize, span: Span) -> R<&Value> {
        if let Some(b) = &self.building {
            return Ok(&b[i]);
        }
        match self.actor.and_then(|a| self.sys.actor(a)) {
            Some(a) => Ok(&a.fields[i]),
            None => fail("no running actor", span),
        }
    }

    fn field_mut(&mut self, i: usize, span: Span) -> R<&mut Value> {
        if let Some(b) = &mut self.building {
            return Ok(&mut b[i]);
        }
        match self.actor.and_then(|a| self.sys.actors.get_mut(a as usize)).and_then(|a| a.as_mut()) {
            Some(a) => Ok(&mut a.fields[i]),
            None => fail("no running actor", span),
        }
    }

    fn truthy(&mut self, e: &TExpr) -> R<bool> {
        match self.eval(e)? {
            Value::Bool(b) => Ok(b),
            v => fail(format!("expected bool, found {}", v.kind_name()), e.span),
        }
    }

    pub fn eval(&mut self, e: &TExpr) -> R<Value> {
        let span = e.span;
        match &e.kind {
            TExprKind::Const(v) => Ok(v.clone()),
            TExprKind::Local(s) => Ok(self.locals[*s].clone()),
            TExprKind::Field(i) => self.field(*i, span).cloned(),
            TExprKind::SelfRef => match self.actor {
                Some(a) => Ok(Value::Actor(a)),
                None => fail("`self` outside an actor", span),
            },
            TExprKind::Message(key) => self.message_key(key, span),
            TExprKind::Member { object, index } => match self.eval(object)? {
                Value::Tuple(_, items) | Value::Record(_, items) => items
                    .get(*index)
                    .cloned()
                    .map_or_else(|| fail("member out of range", span), Ok),
                Value::Object(o) => Ok(o.borrow().fields[*index].clone()),
                Value::Null => fail("null reference", object.span),
                v => fail(format!("{} value has no members", v.kind_name()), span),
            },
            TExprKind::Index { object, index, mode } => {
                let o = self.eval(object)?;
                let i = self.eval(index)?;
                read_index(o, &i, *mode).at(span)
            }
            TExprKind::Call { func, args } => {
                let vals = self.eval_all(args)?;
                self.call(*func, vals, span)
            }
            TExprKind::External { name, args, write_back } => {
                let vals = self.eval_all(args)?;
                let v = self.external(name, vals, span)?;
                if let Some(lv) = write_back {
                    self.store(lv, v.clone(), span)?;
                }
                Ok(v)
            }
            TExprKind::Prev(i) => {
                let now = self.sys.now();
                let found = self.actor.and_then(|a| self.sys.actor(a)).and_then(|a| a.prev(*i, now));
                match found {
                    Some(v) => Ok(v.clone()),
                    None => fail("no recorded value before the current time", span),
                }
            }
            TExprKind::Now => Ok(Value::Double(decimal_to_f64(self.sys.now()))),
            TExprKind::Unary { op, operand } => {
                let v = self.eval(operand)?;
                ops::unary(*op, &v, &e.ty).at(span)
            }
            TExprKind::IncDec { target, delta, post } => {
                let (root, steps) = self.resolve(target)?;
                let (delta, post, ty) = (*delta, *post, e.ty.clone());
                self.with_place(root, &steps, false, span, move |v| {
                    let old = v.clone();
                    let new = ops::step(&old, delta, &ty)?;
                    *v = new.clone();
                    Ok(if post { old } else { new })
                })
            }
            TExprKind::Binary { op, lhs, rhs } => match op {
                BinOp::And => Ok(Value::Bool(self.truthy(lhs)? && self.truthy(rhs)?)),
                BinOp::Or => Ok(Value::Bool(self.truthy(lhs)? || self.truthy(rhs)?)),
                _ => {
                    let l = self.eval(lhs)?;
                    let r = self.eval(rhs)?;
                    ops::binary(*op, &l, &r, &e.ty).at(span)
                }
            },
            TExprKind::Assign { target, value } => {
                let v = self.eval(value)?;
                self.store(target, v.clone(), span)?;
                Ok(v)
            }
            TExprKind::Cond { cond, then, els } => {
                if self.truthy(cond)? {
                    self.eval(then)
                } else {
                    self.eval(els)
                }
            }
            TExprKind::Convert { operand, to } => {
                let v = self.eval(operand)?;
                convert(v, to, self.cx()).at(span)
            }
            TExprKind::Collection { kind, elems } => {
                let vals = self.eval_all(elems)?;
                Ok(match kind {
                    CollectionKind::Array => Value::Array(vals),
                    CollectionKind::List => Value::List(vals),
                    CollectionKind::Set => {
                        let mut out: Vec<Value> = Vec::new();
                        for v in vals {
                            if !out.contains(&v) {
                                out.push(v);
                            }
                        }
                        Value::Set(out)
                    }
                })
            }
            TExprKind::MapLit { entries } => {
                let mut out: Vec<(Value, Value)> = Vec::new();
                for (k, v) in entries {
                    let k = self.eval(k)?;
                    let v = self.eval(v)?;
                    map_insert(&mut out, k, v);
                }
                Ok(Value::Map(out))
            }
            TExprKind::TupleLit { ty, elems } => Ok(Value::Tuple(*ty, self.eval_all(elems)?)),
            TExprKind::RecordLit { ty, fields } => Ok(Value::Record(*ty, self.eval_all(fields)?)),
            TExprKind::Instantiate { class, args, prealloc } => self.instantiate(*class, args, *prealloc, span),
            TExprKind::Tell { receiver, event, args, with } => self.tell(receiver, event, args, with, span),
            TExprKind::Cancel(names) => {
                let Some(a) = self.actor else { return fail("`cancel` outside an actor", span) };
                let n = self.sys.cancel(a, names.as_deref());
                Ok(Value::Bool(n > 0))
            }
            TExprKind::Cases(c) => match self.cases(c)? {
                Some(Flow::Normal(v)) | Some(Flow::Return(v)) => Ok(v),
                Some(Flow::Break) => Ok(Value::Void),
                None => fail("no case matches the selector", span),
            },
        }
    }

    fn eval_all(&mut self, es: &[TExpr]) -> R<Vec<Value>> {
        es.iter().map(|e| self.eval(e)).collect()
    }

    fn message_key(&self, key: &str, span: Span) -> R<Value> {
        let Some(m) = self.message else { return fail("no message in scope", span) };
        let units = |d: Decimal| Value::Double(decimal_to_f64(d));
        match key {
            "sender" => Ok(Value::Actor(m.sender)),
            "t_send" => Ok(units(m.t_send)),
            "t_assume" => Ok(units(m.t_assume)),
            "after" => Ok(m.with_value("after").cloned().unwrap_or(Value::Timespan(Decimal::ZERO))),
            _ => match m.with_value(key) {
                Some(v) => Ok(v.clone()),
                None => fail(format!("message `{}` carries no `{key}`", m.event), span),
            },
        }
    }

    fn resolve(&mut self, lv: &LValue) -> R<(Root, Vec<Step>)> {
        let mut steps = Vec::new();
        let root = self.resolve_into(lv, &mut steps)?;
        Ok((root, steps))
    }

    fn resolve_into(&mut self, lv: &LValue, steps: &mut Vec<Step>) -> R<Root> {
        match lv {
            LValue::Local(s) => Ok(Root::Local(*s)),
            LValue::Field(i) => Ok(Root::Field(*i)),
            LValue::Index { base, index, mode } => {
                let root = self.resolve_into(base, steps)?;
                let k = self.eval(index)?;
                steps.push(Step::Index(k, *mode));
                Ok(root)
            }
            LValue::Member { base, index } => {
                let root = self.resolve_into(base, steps)?;
                steps.push(Step::Member(*index));
                Ok(root)
            }
            LValue::ObjectField { object, index } => match self.eval(object)? {
                Value::Object(o) => Ok(Root::Object(o, *index)),
                Value::Null => fail("null reference", object.span),
                v => fail(format!("{} value has no fields", v.kind_name()), object.span),
            },
        }
    }

    fn with_place<T>(
        &mut self,
        root: Root,
        steps: &[Step],
        insert: bool,
        span: Span,
        f: impl FnOnce(&mut Value) -> Result<T, String>,
    ) -> R<T> {
        match root {
            Root::Local(s) => walk(&mut self.locals[s], steps, insert, f).at(span),
            Root::Field(i) => walk(self.field_mut(i, span)?, steps, insert, f).at(span),
            Root::Object(o, i) => {
                let mut o = o.borrow_mut();
                walk(&mut o.fields[i], steps, insert, f).at(span)
            }
        }
    }

    fn store(&mut self, lv: &LValue, v: Value, span: Span) -> R<()> {
        let (root, steps) = self.resolve(lv)?;
        self.with_place(root, &steps, true, span, |slot| {
            *slot = v;
            Ok(())
        })
    }

    fn call(&mut self, func: FnRef, args: Vec<Value>, span: Span) -> R<Value> {
        let model = self.model();
        let info = match func {
            FnRef::Class(ci, fi) => &model.classes[ci].functions[fi],
            FnRef::Global(fi) => &model.functions[fi],
        };
        if self.depth >= MAX_CALL_DEPTH {
            return fail(format!("call depth limit ({MAX_CALL_DEPTH}) exceeded in `{}`", info.name), span);
        }
        let mut locals = vec![Value::Void; info.frame.len().max(args.len())];
        for (i, a) in args.into_iter().enumerate() {
            locals[i] = a;
        }
        let saved = std::mem::replace(&mut self.locals, locals);
        self.depth += 1;
        let flow = self.exec_block(&info.body);
        self.depth -= 1;
        self.locals = saved;
        match flow? {
            Flow::Return(v) => Ok(v),
            _ if info.ret == Type::Void => Ok(Value::Void),
            _ => fail(format!("function `{}` ended without returning a value", info.name), span),
        }
    }

    fn external(&mut self, name: &str, args: Vec<Value>, span: Span) -> R<Value> {
        let Some(f) = externals::lookup(name, args.len()) else {
            return fail(format!("unknown external `{name}/{}`", args.len()), span);
        };
        let now = decimal_to_f64(self.sys.now());
        let sys = &mut *self.sys;
        let mut stop = false;
        let mut cx = HostCtx {
            reg: &sys.model.registry,
            now,
            rng: &mut sys.rng,
            output: &mut sys.output,
            terminate: &mut stop,
        };
        let r = f(&mut cx, args).at(span);
        if stop {
            sys.request_terminate();
        }
        r
    }

    fn instantiate(&mut self, ci: usize, args: &[Option<TExpr>], prealloc: Option<Slot>, span: Span) -> R<Value> {
        let model = self.model();
        let class = &model.classes[ci];
        let mut provided = Vec::with_capacity(args.len());
        for a in args {
            provided.push(match a {
                Some(e) => Some(self.eval(e)?),
                None => None,
            });
        }
        let id = match class.kind {
            RefKind::Object => None,
            _ => Some(match prealloc.map(|s| &self.locals[s]) {
                Some(Value::Actor(id)) => *id,
                _ => self.sys.alloc_id(),
            }),
        };
        let mut fields: Vec<Value> = Vec::with_capacity(class.fields.len());
        for (i, f) in class.fields.iter().enumerate() {
            fields.push(match provided.get_mut(i).and_then(Option::take) {
                Some(v) => v,
                None => Value::zero(&f.ty, &model.registry),
            });
        }
        // defaults run in the new instance's context
        let saved = (
            self.actor,
            self.class,
            self.message.take(),
            std::mem::replace(&mut self.locals, vec![Value::Void; class.init_frame]),
            self.building.replace(fields),
        );
        self.actor = id;
        self.class = Some(ci);
        let mut result = Ok(());
        for (i, f) in class.fields.iter().enumerate() {
            if args.get(i).is_some_and(Option::is_some) {
                continue;
            }
            match &f.default {
                Some(d) => match self.eval(d) {
                    Ok(v) => self.building.as_mut().unwrap()[i] = v,
                    Err(e) => {
                        result = Err(e);
                        break;
                    }
                },
                None if crate::types::is_reference(&f.ty, &model.registry) => {
                    result = fail(format!("`{}` needs a value for field `{}`", class.name, f.name), span);
                    break;
                }
                None => {}
            }
        }
        let fields = self.building.take().unwrap();
        (self.actor, self.class, self.message, self.locals, self.building) = saved;
        result?;
        match id {
            None => Ok(Value::Object(Rc::new(RefCell::new(ObjectData { class: class.type_id, fields })))),
            Some(id) => {
                self.sys.spawn(id, ci, fields);
                Ok(Value::Actor(id))
            }
        }
    }

    fn tell(&mut self, receiver: &TExpr, event: &str, args: &[TExpr], with: &[(String, TExpr)], span: Span) -> R<Value> {
        let to = match self.eval(receiver)? {
            Value::Actor(id) => id,
            Value::Null => return fail(format!("`{event}` sent to a null reference"), receiver.span),
            v => return fail(format!("cannot send to a {} value", v.kind_name()), receiver.span),
        };
        let vals = self.eval_all(args)?;
        let Some(mut sender) = self.actor else { return fail("no sending actor", span) };
        let mut after = Decimal::ZERO;
        let mut extra = Vec::new();
        for (k, e) in with {
            let v = self.eval(e)?;
            match (k.as_str(), v) {
                ("sender", Value::Actor(a)) => sender = a,
                ("sender", _) => return fail("`sender` must be an actor", e.span),
                ("after", Value::Timespan(ms)) => {
                    after = ms;
                    extra.push((k.clone(), Value::Timespan(ms)));
                }
                (_, v) => extra.push((k.clone(), v)),
            }
        }
        self.sys.send(sender, to, event, vals, extra, after).at(span)?;
        Ok(Value::Bool(true))
    }

    /// Runs the matching arm; `None` when nothing matched and there is no
    /// `otherwise`.
    fn cases(&mut self, c: &TCases) -> R<Option<Flow>> {
        let sel = self.eval(&c.selector)?;
        for (v, body) in &c.arms {
            if self.eval(v)? == sel {
                return self.exec_block(body).map(Some);
            }
        }
        match &c.otherwise {
            Some(b) => self.exec_block(b).map(Some),
            None => Ok(None),
        }
    }

    pub fn exec_block(&mut self, b: &TBlock) -> R<Flow> {
        let mut last = Value::Void;
        for s in &b.stmts {
            match self.exec(s)? {
                Flow::Normal(v) => last = v,
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal(last))
    }

    fn exec(&mut self, s: &TStmt) -> R<Flow> {
        match &s.kind {
            TStmtKind::Let { slot, init } => {
                self.locals[*slot] = self.eval(init)?;
                Ok(Flow::Normal(Value::Void))
            }
            TStmtKind::Expr(e) => Ok(Flow::Normal(self.eval(e)?)),
            TStmtKind::Return(e) => Ok(Flow::Return(match e {
                Some(e) => self.eval(e)?,
                None => Value::Void,
            })),
            TStmtKind::If { cond, then, els } => {
                if self.truthy(cond)? {
                    self.exec_block(then)
                } else if let Some(b) = els {
                    self.exec_block(b)
                } else {
                    Ok(Flow::Normal(Value::Void))
                }
            }
            TStmtKind::While { cond, body } => {
                while self.truthy(cond)? {
                    match self.exec_block(body)? {
                        Flow::Break => break,
                        r @ Flow::Return(_) => return Ok(r),
                        Flow::Normal(_) => {}
                    }
                }
                Ok(Flow::Normal(Value::Void))
            }
            TStmtKind::DoWhile { body, cond } => {
                loop {
                    match self.exec_block(body)? {
                        Flow::Break => break,
                        r @ Flow::Return(_) => return Ok(r),
                        Flow::Normal(_) => {}
                    }
                    if !self.truthy(cond)? {
                        break;
                    }
                }
                Ok(Flow::Normal(Value::Void))
            }
            TStmtKind::Foreach { iter, collection, slots, var_types, body } => {
                let coll = self.eval(collection)?;
                let rows = iteration_rows(*iter, coll).at(collection.span)?;
                for row in rows {
                    for ((slot, ty), v) in slots.iter().zip(var_types).zip(row) {
                        self.locals[*slot] = convert(v, ty, self.cx()).at(s.span)?;
                    }
                    match self.exec_block(body)? {
                        Flow::Break => break,
                        r @ Flow::Return(_) => return Ok(r),
                        Flow::Normal(_) => {}
                    }
                }
                Ok(Flow::Normal(Value::Void))
            }
            TStmtKind::Break => Ok(Flow::Break),
            TStmtKind::Cases(c) => Ok(self.cases(c)?.unwrap_or(Flow::Normal(Value::Void))),
        }
    }
}

fn map_insert(m: &mut Vec<(Value, Value)>, k: Value, v: Value) {
    match m.iter_mut().find(|(x, _)| *x == k) {
        Some(e) => e.1 = v,
        None => m.push((k, v)),
    }
}

fn position(i: &Value, len: usize) -> Result<usize, String> {
    match i {
        Value::Int(n) if *n >= 0 && (*n as usize) < len => Ok(*n as usize),
        Value::Int(n) => Err(format!("index {n} out of bounds for length {len}")),
        v => Err(format!("index must be an integer, found {}", v.kind_name())),
    }
}

fn read_index(o: Value, i: &Value, mode: IndexMode) -> Result<Value, String> {
    match (mode, o) {
        (IndexMode::Seq, Value::Array(v) | Value::List(v) | Value::Set(v)) => Ok(v[position(i, v.len())?].clone()),
        (IndexMode::Seq, Value::Str(s)) => {
            let chars: Vec<char> = s.chars().collect();
            Ok(Value::Char(chars[position(i, chars.len())?]))
        }
        (IndexMode::Map, Value::Map(m)) => m
            .into_iter()
            .find(|(k, _)| k == i)
            .map(|(_, v)| v)
            .ok_or_else(|| "key not found in map".to_string()),
        (IndexMode::Tuple(n), Value::Tuple(_, v) | Value::Record(_, v)) => {
            v.get(n).cloned().ok_or_else(|| format!("position {n} out of range"))
        }
        (_, Value::Null) => Err("null reference".into()),
        (_, v) => Err(format!("cannot index a {} value", v.kind_name())),
    }
}

/// Walks `steps` from `v` and applies `f` to the place reached. With
/// `insert`, a missing map key at the last step is created.
fn walk<T>(v: &mut Value, steps: &[Step], insert: bool, f: impl FnOnce(&mut Value) -> Result<T, String>) -> Result<T, String> {
    let Some((step, rest)) = steps.split_first() else { return f(v) };
    let last = rest.is_empty();
    let next: &mut Value = match (step, v) {
        (Step::Index(i, IndexMode::Seq), Value::Array(items) | Value::List(items) | Value::Set(items)) => {
            let p = position(i, items.len())?;
            &mut items[p]
        }
        (Step::Index(k, IndexMode::Map), Value::Map(entries)) => {
            match entries.iter().position(|(x, _)| x == k) {
                Some(p) => &mut entries[p].1,
                None if insert && last => {
                    entries.push((k.clone(), Value::Null));
                    &mut entries.last_mut().unwrap().1
                }
                None => return Err("key not found in map".into()),
            }
        }
        (Step::Index(_, IndexMode::Tuple(n)) | Step::Member(n), Value::Tuple(_, items) | Value::Record(_, items)) => {
            items.get_mut(*n).ok_or_else(|| format!("position {n} out of range"))?
        }
        (Step::Member(n), Value::Object(o)) => {
            let mut o = o.borrow_mut();
            return walk(&mut o.fields[*n], rest, insert, f);
        }
        (_, Value::Null) => return Err("null reference".into()),
        (_, Value::Str(_)) => return Err("strings cannot be modified in place".into()),
        (_, v) => return Err(format!("cannot index a {} value", v.kind_name())),
    };
    walk(next, rest, insert, f)
}

/// Loop-variable bindings, one row per iteration.
fn iteration_rows(iter: IterFn, coll: Value) -> Result<Vec<Vec<Value>>, String> {
    let rows = match (iter, coll) {
        (IterFn::Keys, Value::Map(m)) => m.into_iter().map(|(k, _)| vec![k]).collect(),
        (IterFn::Values, Value::Map(m)) => m.into_iter().map(|(_, v)| vec![v]).collect(),
        (IterFn::Pairs, Value::Map(m)) => m.into_iter().map(|(k, v)| vec![k, v]).collect(),
        (IterFn::Keys, Value::Array(v) | Value::List(v) | Value::Set(v)) => {
            (0..v.len()).map(|i| vec![Value::Int(i as i128)]).collect()
        }
        (IterFn::Values, Value::Array(v) | Value::List(v) | Value::Set(v)) => v.into_iter().map(|x| vec![x]).collect(),
        (IterFn::Pairs, Value::Array(v) | Value::List(v) | Value::Set(v)) => v
            .into_iter()
            .enumerate()
            .map(|(i, x)| vec![Value::Int(i as i128), x])
            .collect(),
        (_, v) => return Err(format!("cannot iterate over a {} value", v.kind_name())),
    };
    Ok(rows)
}
