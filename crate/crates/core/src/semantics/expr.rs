//! Typing of expressions, coercions and assignment targets.

use super::fold::{fold, Folded};
use super::ir::*;
use super::{Checker, Ctx};
use crate::syntax::ast::{AssignOp, BinOp, CollectionKind, Expr, ExprKind, Ident, RefKind, TypeExpr, UnOp};
use crate::syntax::token::Span;
use crate::types::{coercible, convert, is_reference, unify, IntKind, Type, TypeDef};
use crate::value::Value;

/// Integer or decimal literal, possibly negated.
pub(crate) fn is_number_literal(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Int { .. } | ExprKind::Decimal { .. } => true,
        ExprKind::Unary { op: UnOp::Neg, operand } => is_number_literal(operand),
        _ => false,
    }
}

fn literal_int(e: &Expr) -> Option<i128> {
    match &e.kind {
        ExprKind::Int { value } => Some(*value as i128),
        ExprKind::Unary { op: UnOp::Neg, operand } => literal_int(operand).map(|v| -v),
        _ => None,
    }
}

/// Context type offered to a numeric literal operand, if the literal can
/// take it without changing its value.
pub(crate) fn literal_hint(lit: &Expr, other: &Type) -> Option<Type> {
    match other {
        Type::Int(k) => match literal_int(lit) {
            Some(v) if k.contains(v) => Some(other.clone()),
            _ => None,
        },
        Type::Float | Type::Double => Some(other.clone()),
        _ => None,
    }
}

fn is_strlike(t: &Type) -> bool {
    matches!(t, Type::Str | Type::Char)
}

impl<'a> Checker<'a> {
    /// Builds a typed node and records the rule as applied.
    pub fn node(&mut self, kind: TExprKind, ty: Type, rule: &'static str, span: Span) -> TExpr {
        self.rules.insert(rule);
        TExpr { kind, ty, rule, span }
    }

    /// Placeholder for an expression that failed to type.
    pub fn bad(span: Span) -> TExpr {
        TExpr { kind: TExprKind::Const(Value::Null), ty: Type::Error, rule: "ident", span }
    }

    pub fn expr(&mut self, e: &Expr, expected: Option<&Type>) -> TExpr {
        let span = e.span;
        match &e.kind {
            ExprKind::Int { value } => self.int_literal(*value as i128, expected, span),
            ExprKind::Decimal { text } => self.decimal_literal(text, false, expected, span),
            ExprKind::Bool { value } => self.node(TExprKind::Const(Value::Bool(*value)), Type::Bool, "literal", span),
            ExprKind::Char { value } => self.node(TExprKind::Const(Value::Char(*value)), Type::Char, "literal", span),
            ExprKind::Str { value } => {
                self.node(TExprKind::Const(Value::Str(value.clone())), Type::Str, "literal", span)
            }
            ExprKind::Timespan { value } => self.node(
                TExprKind::Const(Value::Timespan(value.total_millis())),
                Type::Timespan,
                "literal",
                span,
            ),
            ExprKind::Null => self.node(TExprKind::Const(Value::Null), Type::Null, "literal", span),
            ExprKind::Ident { name } => self.ident(name, span),
            ExprKind::SelfRef => self.self_ref(span),
            ExprKind::Member { object, field } => self.member(object, field, span),
            ExprKind::Index { object, index } => self.index(object, index, span),
            ExprKind::Call { callee, args } => self.call(callee, args, span),
            ExprKind::Unary { op, operand } => self.unary(*op, operand, expected, span),
            ExprKind::Binary { op, lhs, rhs } => self.binary(*op, lhs, rhs, span),
            ExprKind::Assign { op, target, value } => self.assign(*op, target, value, span),
            ExprKind::Cond { cond, then, els } => self.cond_expr(cond, then, els, expected, span),
            ExprKind::Cast { operand, ty } => self.cast(operand, ty, span),
            ExprKind::Collection { coll, elems } => self.collection(*coll, elems, expected, span),
            ExprKind::Map { entries } => self.map_literal(entries, expected, span),
            ExprKind::Tuple { elems } => self.tuple_literal(elems, expected, span),
            ExprKind::Tell { receiver, event, args, with } => {
                self.tell(receiver, event, args.as_deref(), with, span)
            }
            ExprKind::Cancel(target) => self.cancel(target, span),
            ExprKind::Cases(body) => self.cases_expr(body, expected, span),
        }
    }

    fn int_literal(&mut self, v: i128, expected: Option<&Type>, span: Span) -> TExpr {
        let (value, ty) = match expected {
            Some(Type::Int(k)) => {
                if !k.contains(v) {
                    self.error(span, "literal", format!("integer literal {v} does not fit in {}", k.name()));
                    return Self::bad(span);
                }
                (Value::Int(v), Type::Int(*k))
            }
            Some(Type::Float) => (Value::Float(v as f32), Type::Float),
            Some(Type::Double) => (Value::Double(v as f64), Type::Double),
            _ if IntKind::I64.contains(v) => (Value::Int(v), Type::Int(IntKind::I64)),
            _ if IntKind::U64.contains(v) => (Value::Int(v), Type::Int(IntKind::U64)),
            _ => {
                self.error(span, "literal", format!("integer literal {v} is out of range"));
                return Self::bad(span);
            }
        };
        self.node(TExprKind::Const(value), ty, "literal", span)
    }

    fn decimal_literal(&mut self, text: &str, neg: bool, expected: Option<&Type>, span: Span) -> TExpr {
        let sign = if neg { -1.0 } else { 1.0 };
        if expected == Some(&Type::Float) {
            let v: f32 = text.parse().unwrap_or(f32::NAN);
            return self.node(TExprKind::Const(Value::Float(v * sign as f32)), Type::Float, "literal", span);
        }
        let v: f64 = text.parse().unwrap_or(f64::NAN);
        self.node(TExprKind::Const(Value::Double(v * sign)), Type::Double, "literal", span)
    }

    fn ident(&mut self, name: &str, span: Span) -> TExpr {
        if let Some(slot) = self.lookup_local(name) {
            let l = self.frame.locals[slot].clone();
            return match l.constant {
                Some(v) => self.node(TExprKind::Const(v), l.ty, "ident", span),
                None => self.node(TExprKind::Local(slot), l.ty, "ident", span),
            };
        }
        if let Some(ci) = self.frame.class {
            if let Some(fi) = self.classes[ci].field_index(name) {
                let ty = self.classes[ci].fields[fi].ty.clone();
                return self.node(TExprKind::Field(fi), ty, "ident", span);
            }
            if let Some(c) = self.classes[ci].consts.iter().find(|c| c.name == name).cloned() {
                self.const_refs.insert(span, c.name.clone());
                return self.node(TExprKind::Const(c.value), c.ty, "ident", span);
            }
        }
        if let Some(c) = self.consts.iter().find(|c| c.name == name).cloned() {
            self.const_refs.insert(span, c.name.clone());
            return self.node(TExprKind::Const(c.value), c.ty, "ident", span);
        }
        if name == "message" {
            self.error(span, "member", "`message` can only be used as `message.<key>`");
        } else {
            self.error(span, "ident", format!("unknown identifier `{name}`"));
        }
        Self::bad(span)
    }

    /// True if `name` resolves to something other than a type.
    fn is_value_name(&self, name: &str) -> bool {
        if self.lookup_local(name).is_some() || self.consts.iter().any(|c| c.name == name) {
            return true;
        }
        match self.frame.class {
            Some(ci) => {
                let c = &self.classes[ci];
                c.field_index(name).is_some() || c.consts.iter().any(|k| k.name == name)
            }
            None => false,
        }
    }

    fn self_ref(&mut self, span: Span) -> TExpr {
        match self.frame.class {
            Some(ci) => {
                let id = self.classes[ci].type_id;
                self.node(TExprKind::SelfRef, Type::Named(id), "ident", span)
            }
            None => {
                self.error(span, "ident", "`self` used outside a class");
                Self::bad(span)
            }
        }
    }

    fn member(&mut self, object: &Expr, field: &Ident, span: Span) -> TExpr {
        if let ExprKind::Ident { name } = &object.kind {
            if !self.is_value_name(name) {
                if name == "message" {
                    return self.message_key(&field.name, span);
                }
                if let Some(Type::Named(id)) = self.reg.resolve_name(name) {
                    if let Some(e) = self.reg.enum_def(id) {
                        return match e.code_of(&field.name) {
                            Some(c) => self.node(TExprKind::Const(Value::Enum(id, c)), Type::Named(id), "member-enum", span),
                            None => {
                                self.error(field.span, "member-enum", format!("enum `{name}` has no constant `{}`", field.name));
                                Self::bad(span)
                            }
                        };
                    }
                }
            }
        }
        if matches!(object.kind, ExprKind::SelfRef) {
            if let Some(ci) = self.frame.class {
                if let Some(fi) = self.classes[ci].field_index(&field.name) {
                    let ty = self.classes[ci].fields[fi].ty.clone();
                    return self.node(TExprKind::Field(fi), ty, "member", span);
                }
                if let Some(c) = self.classes[ci].consts.iter().find(|c| c.name == field.name).cloned() {
                    return self.node(TExprKind::Const(c.value), c.ty, "member", span);
                }
                let cname = self.classes[ci].name.clone();
                self.error(field.span, "member", format!("class `{cname}` has no field `{}`", field.name));
                return Self::bad(span);
            }
        }
        let obj = self.expr(object, None);
        if obj.ty.is_error() {
            return Self::bad(span);
        }
        match self.field_of(&obj.ty, &field.name) {
            Ok((index, ty)) => self.node(TExprKind::Member { object: Box::new(obj), index }, ty, "member", span),
            Err(msg) => {
                self.error(field.span, "member", msg);
                Self::bad(span)
            }
        }
    }

    /// Position and type of a named field in a record or passive object.
    fn field_of(&self, t: &Type, name: &str) -> Result<(usize, Type), String> {
        let shown = self.show(t);
        let Type::Named(id) = t else {
            return Err(format!("type {shown} has no field `{name}`"));
        };
        match self.reg.get(*id) {
            TypeDef::Record { fields, .. } => fields
                .iter()
                .position(|(n, _)| n == name)
                .map(|i| (i, fields[i].1.clone()))
                .ok_or_else(|| format!("record {shown} has no field `{name}`")),
            TypeDef::Class { kind: RefKind::Object, index, .. } => {
                let c = &self.classes[*index];
                c.field_index(name)
                    .map(|i| (i, c.fields[i].ty.clone()))
                    .ok_or_else(|| format!("class {shown} has no field `{name}`"))
            }
            TypeDef::Class { .. } => Err(format!(
                "fields of actor {shown} are private; send it a message instead"
            )),
            _ => Err(format!("type {shown} has no field `{name}`")),
        }
    }

    fn message_key(&mut self, key: &str, span: Span) -> TExpr {
        if self.frame.ctx != Ctx::Response {
            self.error(span, "member", "`message` is only available inside event responses");
            return Self::bad(span);
        }
        let ty = match key {
            "sender" => Type::ActorRef,
            "t_send" | "t_assume" => Type::Double,
            "after" | "deadline" => Type::Timespan,
            _ => {
                self.custom_key_read = true;
                match &self.known_keys {
                    Some(keys) => match keys.get(key) {
                        Some(t) => t.clone(),
                        None => {
                            self.error(span, "member", format!("no `with` clause in the model sets message key `{key}`"));
                            return Self::bad(span);
                        }
                    },
                    // typed properly on the second pass
                    None => self.with_keys.get(key).cloned().unwrap_or(Type::Any),
                }
            }
        };
        self.node(TExprKind::Message(key.to_string()), ty, "member", span)
    }

    fn int_index(&mut self, index: &Expr) -> TExpr {
        let i = self.expr(index, Some(&Type::default_int()));
        if !i.ty.is_integer() && !i.ty.is_error() {
            let shown = self.show(&i.ty);
            self.error(index.span, "index-int", format!("index must be an integer, found {shown}"));
            return Self::bad(index.span);
        }
        i
    }

    /// Constant position into a tuple-like value of `len` elements.
    fn tuple_position(&mut self, index: &Expr, len: usize) -> Option<usize> {
        let i = self.expr(index, Some(&Type::default_int()));
        match self.fold_value(&i) {
            Some(Value::Int(n)) if n >= 0 && (n as usize) < len => Some(n as usize),
            _ => {
                self.error(index.span, "index-tuple", format!("tuple index must be a constant in 0..{len}"));
                None
            }
        }
    }

    fn index(&mut self, object: &Expr, index: &Expr, span: Span) -> TExpr {
        let obj = self.expr(object, None);
        let ty = obj.ty.clone();
        match &ty {
            Type::Error => Self::bad(span),
            Type::Array(e, _) | Type::List(e) | Type::Set(e) => {
                let i = self.int_index(index);
                let kind = TExprKind::Index { object: Box::new(obj), index: Box::new(i), mode: IndexMode::Seq };
                self.node(kind, (**e).clone(), "index-int", span)
            }
            Type::Str => {
                let i = self.int_index(index);
                let kind = TExprKind::Index { object: Box::new(obj), index: Box::new(i), mode: IndexMode::Seq };
                self.node(kind, Type::Char, "index-int", span)
            }
            Type::Map(k, v) => {
                let i = self.expr(index, Some(k));
                let i = self.coerce(i, k, "index-key");
                let kind = TExprKind::Index { object: Box::new(obj), index: Box::new(i), mode: IndexMode::Map };
                self.node(kind, (**v).clone(), "index-key", span)
            }
            t => match self.reg.positional(t) {
                Some(types) => match self.tuple_position(index, types.len()) {
                    Some(n) => {
                        let i = self.node(TExprKind::Const(Value::Int(n as i128)), Type::default_int(), "literal", index.span);
                        let kind =
                            TExprKind::Index { object: Box::new(obj), index: Box::new(i), mode: IndexMode::Tuple(n) };
                        self.node(kind, types[n].clone(), "index-tuple", span)
                    }
                    None => Self::bad(span),
                },
                None => {
                    let shown = self.show(t);
                    self.error(span, "index-int", format!("values of type {shown} cannot be indexed"));
                    Self::bad(span)
                }
            },
        }
    }

    fn unary(&mut self, op: UnOp, operand: &Expr, expected: Option<&Type>, span: Span) -> TExpr {
        match op {
            UnOp::Neg => {
                // negative literals are literals, so they adapt like positive ones
                match &operand.kind {
                    ExprKind::Int { value } => return self.int_literal(-(*value as i128), expected, span),
                    ExprKind::Decimal { text } => return self.decimal_literal(text, true, expected, span),
                    _ => {}
                }
                let v = self.expr(operand, expected.filter(|t| t.is_numeric()));
                match &v.ty {
                    Type::Error => Self::bad(span),
                    Type::Int(k) if !k.signed() => {
                        self.error(span, "unary-arith", format!("cannot negate a value of type {}", k.name()));
                        Self::bad(span)
                    }
                    t if t.is_numeric() || *t == Type::Timespan => {
                        let ty = t.clone();
                        self.node(TExprKind::Unary { op: UnaryOp::Neg, operand: Box::new(v) }, ty, "unary-arith", span)
                    }
                    t => {
                        let shown = self.show(t);
                        self.error(span, "unary-arith", format!("unary `-` cannot be applied to {shown}"));
                        Self::bad(span)
                    }
                }
            }
            UnOp::Not => {
                let v = self.expr(operand, Some(&Type::Bool));
                let v = self.coerce(v, &Type::Bool, "unary-logic");
                self.node(TExprKind::Unary { op: UnaryOp::Not, operand: Box::new(v) }, Type::Bool, "unary-logic", span)
            }
            UnOp::BitNot => {
                let v = self.expr(operand, None);
                match &v.ty {
                    Type::Error => Self::bad(span),
                    t if t.is_integer() => {
                        let ty = t.clone();
                        self.node(TExprKind::Unary { op: UnaryOp::BitNot, operand: Box::new(v) }, ty, "bitwise-unary", span)
                    }
                    t => {
                        let shown = self.show(t);
                        self.error(span, "bitwise-unary", format!("`~` needs an integer operand, found {shown}"));
                        Self::bad(span)
                    }
                }
            }
            UnOp::PreInc | UnOp::PreDec | UnOp::PostInc | UnOp::PostDec => {
                let delta = if matches!(op, UnOp::PreInc | UnOp::PostInc) { 1 } else { -1 };
                let post = matches!(op, UnOp::PostInc | UnOp::PostDec);
                let Some((target, ty)) = self.lvalue(operand) else { return Self::bad(span) };
                if !ty.is_numeric() {
                    if !ty.is_error() {
                        let shown = self.show(&ty);
                        self.error(span, "assign-ext", format!("`{}` needs a numeric variable, found {shown}", op.symbol()));
                    }
                    return Self::bad(span);
                }
                self.node(TExprKind::IncDec { target: Box::new(target), delta, post }, ty, "assign-ext", span)
            }
        }
    }

    /// Types both operands, giving a numeric literal on one side the type of
    /// the other side when it fits.
    fn operands(&mut self, lhs: &Expr, rhs: &Expr) -> (TExpr, TExpr) {
        if is_number_literal(lhs) && !is_number_literal(rhs) {
            let r = self.expr(rhs, None);
            let hint = literal_hint(lhs, &r.ty);
            let l = self.expr(lhs, hint.as_ref());
            (l, r)
        } else {
            let l = self.expr(lhs, None);
            let hint = if is_number_literal(rhs) { literal_hint(rhs, &l.ty) } else { None };
            let r = self.expr(rhs, hint.as_ref());
            (l, r)
        }
    }

    fn binary(&mut self, op: BinOp, lhs: &Expr, rhs: &Expr, span: Span) -> TExpr {
        match op {
            BinOp::And | BinOp::Or => {
                let l = self.expr(lhs, Some(&Type::Bool));
                let l = self.coerce(l, &Type::Bool, "binary-logic");
                let r = self.expr(rhs, Some(&Type::Bool));
                let r = self.coerce(r, &Type::Bool, "binary-logic");
                let kind = TExprKind::Binary { op, lhs: Box::new(l), rhs: Box::new(r) };
                self.node(kind, Type::Bool, "binary-logic", span)
            }
            BinOp::Shl | BinOp::Shr => {
                let l = self.expr(lhs, None);
                let r = self.expr(rhs, None);
                if l.ty.is_error() || r.ty.is_error() {
                    return Self::bad(span);
                }
                if !l.ty.is_integer() {
                    let shown = self.show(&l.ty);
                    self.error(lhs.span, "shift", format!("shifted value must be an integer, found {shown}"));
                    return Self::bad(span);
                }
                if !matches!(r.ty, Type::Int(k) if !k.signed()) {
                    let shown = self.show(&r.ty);
                    self.error(
                        rhs.span,
                        "shift",
                        format!("shift amount must be unsigned, found {shown}; convert it explicitly, e.g. `n as uint8`"),
                    );
                    return Self::bad(span);
                }
                let ty = l.ty.clone();
                let kind = TExprKind::Binary { op, lhs: Box::new(l), rhs: Box::new(r) };
                self.node(kind, ty, "shift", span)
            }
            _ => {
                let (l, r) = self.operands(lhs, rhs);
                self.binary_typed(op, l, r, span)
            }
        }
    }

    fn mismatch(&mut self, op: BinOp, l: &Type, r: &Type, rule: &'static str, span: Span) -> TExpr {
        let (a, b) = (self.show(l), self.show(r));
        self.error(span, rule, format!("operator `{}` cannot be applied to {a} and {b}", op.symbol()));
        Self::bad(span)
    }

    fn make_binary(&mut self, op: BinOp, l: TExpr, r: TExpr, ty: Type, rule: &'static str, span: Span) -> TExpr {
        let kind = TExprKind::Binary { op, lhs: Box::new(l), rhs: Box::new(r) };
        self.node(kind, ty, rule, span)
    }

    /// Arithmetic, comparison and bitwise operators over typed operands.
    pub(crate) fn binary_typed(&mut self, op: BinOp, l: TExpr, r: TExpr, span: Span) -> TExpr {
        if l.ty.is_error() || r.ty.is_error() {
            return Self::bad(span);
        }
        let (lt, rt) = (l.ty.clone(), r.ty.clone());
        match op {
            BinOp::Add | BinOp::Sub | BinOp::Mul => {
                if op == BinOp::Add && is_strlike(&lt) && is_strlike(&rt) && (lt == Type::Str || rt == Type::Str) {
                    let l = self.coerce(l, &Type::Str, "string-concat");
                    let r = self.coerce(r, &Type::Str, "string-concat");
                    return self.make_binary(op, l, r, Type::Str, "string-concat", span);
                }
                if lt == Type::Timespan && rt == Type::Timespan && op != BinOp::Mul {
                    return self.make_binary(op, l, r, Type::Timespan, "timespan-arith", span);
                }
                if lt.is_numeric() && rt.is_numeric() {
                    if coercible(&lt, &rt, &self.reg) {
                        let l = self.coerce(l, &rt, "binary-arith1");
                        return self.make_binary(op, l, r, rt, "binary-arith1", span);
                    }
                    if coercible(&rt, &lt, &self.reg) {
                        let r = self.coerce(r, &lt, "binary-arith2");
                        return self.make_binary(op, l, r, lt, "binary-arith2", span);
                    }
                    let (a, b) = (self.show(&lt), self.show(&rt));
                    self.error(
                        span,
                        "binary-arith1",
                        format!("operands of `{}` have incompatible types {a} and {b}; convert one explicitly", op.symbol()),
                    );
                    return Self::bad(span);
                }
                self.mismatch(op, &lt, &rt, "binary-arith1", span)
            }
            BinOp::Div => {
                let ok = |t: &Type| t.is_numeric() || *t == Type::Timespan;
                if !(ok(&lt) && ok(&rt)) {
                    return self.mismatch(op, &lt, &rt, "binary-div", span);
                }
                let l = self.convert_to(l, &Type::Double, "binary-div");
                let r = self.convert_to(r, &Type::Double, "binary-div");
                self.make_binary(op, l, r, Type::Double, "binary-div", span)
            }
            BinOp::Mod | BinOp::BitAnd | BinOp::BitOr | BinOp::BitXor => {
                let rule = if op == BinOp::Mod { "binary-mod" } else { "bitwise-binary" };
                match unify(&lt, &rt, &self.reg) {
                    Some(u) if u.is_integer() && lt.is_integer() && rt.is_integer() => {
                        let l = self.coerce(l, &u, rule);
                        let r = self.coerce(r, &u, rule);
                        self.make_binary(op, l, r, u, rule, span)
                    }
                    _ => {
                        let (a, b) = (self.show(&lt), self.show(&rt));
                        self.error(
                            span,
                            rule,
                            format!("`{}` needs integer operands of a common type, found {a} and {b}", op.symbol()),
                        );
                        Self::bad(span)
                    }
                }
            }
            BinOp::Eq | BinOp::Ne => {
                if lt == rt && lt != Type::Any {
                    let rule = if lt == Type::Timespan { "cmp-timespan" } else { "cmp-eq" };
                    return self.make_binary(op, l, r, Type::Bool, rule, span);
                }
                let named = |t: &Type| matches!(t, Type::Named(_)) && self.reg.class_kind(t).is_none();
                if named(&lt) && named(&rt) {
                    let (a, b) = (self.show(&lt), self.show(&rt));
                    self.error(span, "context-diff", format!("values of distinct types {a} and {b} cannot be compared"));
                    return Self::bad(span);
                }
                match unify(&lt, &rt, &self.reg) {
                    Some(u) if u != Type::Any => {
                        let l = self.coerce(l, &u, "cmp-eq");
                        let r = self.coerce(r, &u, "cmp-eq");
                        self.make_binary(op, l, r, Type::Bool, "cmp-eq", span)
                    }
                    _ => {
                        let (a, b) = (self.show(&lt), self.show(&rt));
                        self.error(span, "cmp-eq", format!("cannot compare {a} with {b}"));
                        Self::bad(span)
                    }
                }
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                if lt == Type::Timespan && rt == Type::Timespan {
                    return self.make_binary(op, l, r, Type::Bool, "cmp-timespan", span);
                }
                if (lt == Type::Timespan && rt.is_numeric()) || (rt == Type::Timespan && lt.is_numeric()) {
                    let l = self.convert_to(l, &Type::Double, "timespan-to-num");
                    let r = self.convert_to(r, &Type::Double, "timespan-to-num");
                    return self.make_binary(op, l, r, Type::Bool, "cmp-timespan", span);
                }
                if lt.is_numeric() && rt.is_numeric() {
                    return match unify(&lt, &rt, &self.reg) {
                        Some(u) => {
                            let l = self.coerce(l, &u, "cmp-rel");
                            let r = self.coerce(r, &u, "cmp-rel");
                            self.make_binary(op, l, r, Type::Bool, "cmp-rel", span)
                        }
                        None => {
                            let (a, b) = (self.show(&lt), self.show(&rt));
                            self.error(span, "cmp-rel", format!("{a} and {b} have no common numeric type; convert one explicitly"));
                            Self::bad(span)
                        }
                    };
                }
                if is_strlike(&lt) && lt == rt {
                    return self.make_binary(op, l, r, Type::Bool, "cmp-rel", span);
                }
                self.mismatch(op, &lt, &rt, "cmp-rel", span)
            }
            BinOp::And | BinOp::Or | BinOp::Shl | BinOp::Shr => unreachable!("handled before operand typing"),
        }
    }

    /// Explicit conversion node; constants are converted immediately.
    pub(crate) fn convert_to(&mut self, e: TExpr, to: &Type, rule: &'static str) -> TExpr {
        if e.ty == *to || e.ty.is_error() {
            return e;
        }
        let span = e.span;
        let node = self.node(TExprKind::Convert { operand: Box::new(e), to: to.clone() }, to.clone(), rule, span);
        self.fold_in_place(node)
    }

    /// Replaces a conversion of a constant by its value, reporting failures.
    fn fold_in_place(&mut self, e: TExpr) -> TExpr {
        let TExprKind::Convert { operand, .. } = &e.kind else { return e };
        if operand.constant().is_none() {
            return e;
        }
        match fold(&e, self.cx()) {
            Folded::Value(v) => TExpr { kind: TExprKind::Const(v), ..e },
            Folded::Error(m) => {
                self.error(e.span, e.rule, m);
                Self::bad(e.span)
            }
            Folded::NotConst => e,
        }
    }

    /// Implicit conversion of `e` to `ty` under rule generic-coercion.
    /// `rule` names the context and is used for the diagnostic when the
    /// coercion does not exist.
    pub fn coerce(&mut self, e: TExpr, ty: &Type, rule: &'static str) -> TExpr {
        if e.ty == *ty || *ty == Type::Any || e.ty.is_error() || ty.is_error() {
            return e;
        }
        self.rules.insert(rule);
        if e.ty != Type::Void && coercible(&e.ty, ty, &self.reg) {
            self.rules.insert("generic-coercion");
            if is_reference(&e.ty, &self.reg) && is_reference(ty, &self.reg) && e.ty != Type::Null {
                return TExpr { ty: ty.clone(), ..e };
            }
            if let Some(v) = e.constant() {
                return match convert(v.clone(), ty, self.cx()) {
                    Ok(v) => TExpr { kind: TExprKind::Const(v), ty: ty.clone(), rule: "generic-coercion", span: e.span },
                    Err(m) => {
                        self.error(e.span, rule, m);
                        Self::bad(e.span)
                    }
                };
            }
            let span = e.span;
            return TExpr {
                kind: TExprKind::Convert { operand: Box::new(e), to: ty.clone() },
                ty: ty.clone(),
                rule: "generic-coercion",
                span,
            };
        }
        let (want, got) = (self.show(ty), self.show(&e.ty));
        if self.cast_rule(&e.ty, ty).is_some() {
            // convertible, but only with a cast
            self.error(
                e.span,
                "explicit-conversion",
                format!("expected {want}, found {got} ({rule}); this conversion must be written explicitly with `as`"),
            );
        } else {
            self.error(e.span, rule, format!("expected {want}, found {got}"));
        }
        Self::bad(e.span)
    }

    /// Rule that licenses an explicit `e as T` conversion, if any.
    pub(crate) fn cast_rule(&self, from: &Type, to: &Type) -> Option<&'static str> {
        let reg = &self.reg;
        if from == to {
            return Some("explicit-conversion");
        }
        if from.is_numeric() && to.is_numeric() {
            return Some("conv-numeric");
        }
        if reg.is_enum(from) && to.is_integer() {
            return Some("conv-enum2int");
        }
        if from.is_integer() && reg.is_enum(to) {
            return Some("conv-int2enum");
        }
        if *from == Type::Timespan && to.is_numeric() {
            return Some("timespan-to-num");
        }
        if from.is_numeric() && *to == Type::Timespan {
            return Some("num-to-timespan");
        }
        if let (Some(a), Some(b)) = (reg.positional(from), reg.positional(to)) {
            if a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| self.cast_rule(x, y).is_some()) {
                return Some(match (reg.is_record(from), reg.is_record(to)) {
                    (false, true) => "coerce-tup2rec",
                    (true, false) => "coerce-rec2tup",
                    _ => "explicit-conversion",
                });
            }
            return None;
        }
        if coercible(from, to, reg) {
            return Some("explicit-conversion");
        }
        match (from, to) {
            (Type::Array(a, _) | Type::List(a) | Type::Set(a), Type::Array(b, _) | Type::List(b) | Type::Set(b)) => {
                self.cast_rule(a, b).map(|_| "explicit-conversion")
            }
            (Type::Map(k1, v1), Type::Map(k2, v2)) => {
                (self.cast_rule(k1, k2).is_some() && self.cast_rule(v1, v2).is_some()).then_some("explicit-conversion")
            }
            // narrowing an untyped reference to a class
            (Type::ActorRef | Type::ConnectionRef | Type::ObjectRef, t) if reg.class_kind(t).is_some() => {
                Some("explicit-conversion")
            }
            _ => None,
        }
    }

    fn cast(&mut self, operand: &Expr, te: &TypeExpr, span: Span) -> TExpr {
        let to = self.resolve_type(te);
        let v = self.expr(operand, None);
        if v.ty.is_error() || to.is_error() {
            return Self::bad(span);
        }
        let Some(rule) = self.cast_rule(&v.ty, &to) else {
            let (a, b) = (self.show(&v.ty), self.show(&to));
            self.error(span, "explicit-conversion", format!("cannot convert {a} to {b}"));
            return Self::bad(span);
        };
        let named = self.const_refs.contains_key(&v.span);
        let node = self.node(TExprKind::Convert { operand: Box::new(v), to: to.clone() }, to, rule, span);
        let original = named.then(|| node.clone());
        let out = self.fold_in_place(node);
        if let (Some(original), TExprKind::Const(_)) = (original, &out.kind) {
            self.folded_casts.insert(span, original);
        }
        out
    }

    fn cond_expr(&mut self, cond: &Expr, then: &Expr, els: &Expr, expected: Option<&Type>, span: Span) -> TExpr {
        let c = self.expr(cond, Some(&Type::Bool));
        let c = self.coerce(c, &Type::Bool, "ifexpr-undecided");
        let t = self.expr(then, expected);
        let f = self.expr(els, expected);
        if c.ty.is_error() || t.ty.is_error() || f.ty.is_error() {
            return Self::bad(span);
        }
        let (ty, rule, t, f) = match self.fold_value(&c) {
            Some(Value::Bool(true)) => (t.ty.clone(), "ifexpr-true", t, f),
            Some(Value::Bool(false)) => (f.ty.clone(), "ifexpr-false", t, f),
            _ => match unify(&t.ty, &f.ty, &self.reg) {
                Some(u) => {
                    let t = self.coerce(t, &u, "ifexpr-undecided");
                    let f = self.coerce(f, &u, "ifexpr-undecided");
                    (u, "ifexpr-undecided", t, f)
                }
                None => {
                    let (a, b) = (self.show(&t.ty), self.show(&f.ty));
                    self.error(span, "ifexpr-undecided", format!("branches have incompatible types {a} and {b}"));
                    return Self::bad(span);
                }
            },
        };
        let kind = TExprKind::Cond { cond: Box::new(c), then: Box::new(t), els: Box::new(f) };
        self.node(kind, ty, rule, span)
    }

    /// Common type of a list of typed expressions.
    fn unify_all(&mut self, items: &[TExpr], span: Span, what: &str) -> Type {
        let mut acc: Option<Type> = None;
        for e in items {
            acc = Some(match acc {
                None => e.ty.clone(),
                Some(a) => match unify(&a, &e.ty, &self.reg) {
                    Some(u) => u,
                    None => {
                        let (x, y) = (self.show(&a), self.show(&e.ty));
                        self.error(span, "coerce-coll", format!("{what} have incompatible types {x} and {y}"));
                        return Type::Error;
                    }
                },
            });
        }
        acc.unwrap_or(Type::Any)
    }

    fn collection(&mut self, coll: CollectionKind, elems: &[Expr], expected: Option<&Type>, span: Span) -> TExpr {
        let (kind, hint) = match expected {
            Some(Type::Array(e, _)) => (CollectionKind::Array, Some((**e).clone())),
            Some(Type::List(e)) => (CollectionKind::List, Some((**e).clone())),
            Some(Type::Set(e)) => (CollectionKind::Set, Some((**e).clone())),
            _ => (coll, None),
        };
        let hint = hint.filter(|h| *h != Type::Any);
        let items: Vec<TExpr> = elems.iter().map(|x| self.expr(x, hint.as_ref())).collect();
        let elem = match hint {
            Some(h) => h,
            None => self.unify_all(&items, span, "elements"),
        };
        if elem.is_error() {
            return Self::bad(span);
        }
        let items: Vec<TExpr> = items.into_iter().map(|x| self.coerce(x, &elem, "coerce-coll")).collect();
        let ty = match kind {
            CollectionKind::Array => Type::Array(Box::new(elem), Some(items.len() as u64)),
            CollectionKind::List => Type::List(Box::new(elem)),
            CollectionKind::Set => Type::Set(Box::new(elem)),
        };
        self.node(TExprKind::Collection { kind, elems: items }, ty, "coerce-coll", span)
    }

    fn map_literal(&mut self, entries: &[(Expr, Expr)], expected: Option<&Type>, span: Span) -> TExpr {
        let (kh, vh) = match expected {
            Some(Type::Map(k, v)) => (
                Some((**k).clone()).filter(|t| *t != Type::Any),
                Some((**v).clone()).filter(|t| *t != Type::Any),
            ),
            _ => (None, None),
        };
        let mut ks = Vec::new();
        let mut vs = Vec::new();
        for (k, v) in entries {
            ks.push(self.expr(k, kh.as_ref()));
            vs.push(self.expr(v, vh.as_ref()));
        }
        let kt = match kh {
            Some(t) => t,
            None => self.unify_all(&ks, span, "map keys"),
        };
        let vt = match vh {
            Some(t) => t,
            None => self.unify_all(&vs, span, "map values"),
        };
        if kt.is_error() || vt.is_error() {
            return Self::bad(span);
        }
        let mut out = Vec::new();
        for (k, v) in ks.into_iter().zip(vs) {
            let k = self.coerce(k, &kt, "coerce-coll");
            let v = self.coerce(v, &vt, "coerce-coll");
            out.push((k, v));
        }
        self.node(TExprKind::MapLit { entries: out }, Type::Map(Box::new(kt), Box::new(vt)), "coerce-coll", span)
    }

    fn tuple_literal(&mut self, elems: &[Expr], expected: Option<&Type>, span: Span) -> TExpr {
        let hints = expected
            .and_then(|t| self.reg.positional(t))
            .filter(|h| h.len() == elems.len());
        let mut items = Vec::new();
        for (i, x) in elems.iter().enumerate() {
            let h = hints.as_ref().map(|h| h[i].clone());
            let e = self.expr(x, h.as_ref());
            items.push(match &h {
                Some(h) => self.coerce(e, h, "tupleval-inline"),
                None => e,
            });
        }
        if items.iter().any(|e| e.ty.is_error()) {
            return Self::bad(span);
        }
        let ty = Type::Tuple(items.iter().map(|e| e.ty.clone()).collect());
        self.node(TExprKind::TupleLit { ty: None, elems: items }, ty, "tupleval-inline", span)
    }

    fn assign(&mut self, op: AssignOp, target: &Expr, value: &Expr, span: Span) -> TExpr {
        let Some((lv, tty)) = self.lvalue(target) else {
            self.expr(value, None);
            return Self::bad(span);
        };
        match op.binop() {
            None if tty.contains_any() => {
                let v = self.expr(value, None);
                if v.ty.is_error() {
                    return Self::bad(span);
                }
                let refined = self.refine(&tty, &v.ty, value.span);
                self.set_lvalue_type(&lv, refined.clone());
                let v = self.coerce(v, &refined, "assign-any");
                let kind = TExprKind::Assign { target: Box::new(lv), value: Box::new(v) };
                self.node(kind, refined, "assign-any", span)
            }
            None => {
                let v = self.expr(value, Some(&tty));
                let v = self.coerce(v, &tty, "assign");
                let kind = TExprKind::Assign { target: Box::new(lv), value: Box::new(v) };
                self.node(kind, tty, "assign", span)
            }
            Some(bop) => {
                let cur = self.expr(target, None);
                let hint = if is_number_literal(value) { literal_hint(value, &tty) } else { None };
                let rhs = self.expr(value, hint.as_ref());
                let combined = self.binary_typed(bop, cur, rhs, span);
                let v = self.coerce(combined, &tty, "assign-ext");
                let kind = TExprKind::Assign { target: Box::new(lv), value: Box::new(v) };
                self.node(kind, tty, "assign-ext", span)
            }
        }
    }

    pub(crate) fn set_lvalue_type(&mut self, lv: &LValue, ty: Type) {
        match lv {
            LValue::Local(slot) => self.frame.locals[*slot].ty = ty,
            LValue::Field(fi) => {
                if let Some(ci) = self.frame.class {
                    self.classes[ci].fields[*fi].ty = ty;
                }
            }
            _ => {}
        }
    }

    /// Resolves an assignment target to a storage location and its type.
    pub(crate) fn lvalue(&mut self, e: &Expr) -> Option<(LValue, Type)> {
        match &e.kind {
            ExprKind::Ident { name } => {
                if let Some(slot) = self.lookup_local(name) {
                    let l = &self.frame.locals[slot];
                    if l.constant.is_some() {
                        self.error(e.span, "assign", format!("cannot assign to constant `{name}`"));
                        return None;
                    }
                    return Some((LValue::Local(slot), l.ty.clone()));
                }
                if let Some(ci) = self.frame.class {
                    if let Some(fi) = self.classes[ci].field_index(name) {
                        return Some((LValue::Field(fi), self.classes[ci].fields[fi].ty.clone()));
                    }
                }
                if self.is_value_name(name) {
                    self.error(e.span, "assign", format!("cannot assign to constant `{name}`"));
                } else {
                    self.error(e.span, "ident", format!("unknown identifier `{name}`"));
                }
                None
            }
            ExprKind::Member { object, field } => {
                if matches!(object.kind, ExprKind::SelfRef) {
                    if let Some(ci) = self.frame.class {
                        if let Some(fi) = self.classes[ci].field_index(&field.name) {
                            return Some((LValue::Field(fi), self.classes[ci].fields[fi].ty.clone()));
                        }
                    }
                }
                if matches!(&object.kind, ExprKind::Ident { name } if name == "message" && !self.is_value_name(name)) {
                    self.error(e.span, "assign", "message fields are read-only");
                    return None;
                }
                let obj = self.expr(object, None);
                if obj.ty.is_error() {
                    return None;
                }
                let (index, ty) = match self.field_of(&obj.ty, &field.name) {
                    Ok(x) => x,
                    Err(msg) => {
                        self.error(field.span, "member", msg);
                        return None;
                    }
                };
                if self.reg.class_kind(&obj.ty).is_some() {
                    return Some((LValue::ObjectField { object: Box::new(obj), index }, ty));
                }
                let (base, _) = self.lvalue(object)?;
                Some((LValue::Member { base: Box::new(base), index }, ty))
            }
            ExprKind::Index { object, index } => {
                let (base, bty) = self.lvalue(object)?;
                match &bty {
                    Type::Array(el, _) | Type::List(el) => {
                        let i = self.int_index(index);
                        Some((LValue::Index { base: Box::new(base), index: Box::new(i), mode: IndexMode::Seq }, (**el).clone()))
                    }
                    Type::Map(k, v) => {
                        let i = self.expr(index, Some(k));
                        let i = self.coerce(i, k, "index-key");
                        Some((LValue::Index { base: Box::new(base), index: Box::new(i), mode: IndexMode::Map }, (**v).clone()))
                    }
                    Type::Error => None,
                    t => match self.reg.positional(t) {
                        Some(types) => {
                            let n = self.tuple_position(index, types.len())?;
                            Some((LValue::Member { base: Box::new(base), index: n }, types[n].clone()))
                        }
                        None => {
                            let shown = self.show(t);
                            self.error(e.span, "assign", format!("elements of {shown} cannot be assigned"));
                            None
                        }
                    },
                }
            }
            _ => {
                self.error(e.span, "assign", "left side of assignment is not assignable");
                None
            }
        }
    }
}
