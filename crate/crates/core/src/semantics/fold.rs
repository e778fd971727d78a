//! Constant folding over typed expressions.

use super::ir::{TExpr, TExprKind};
use crate::ops;
use crate::syntax::ast::CollectionKind;
use crate::types::{convert, ConvCtx};
use crate::value::Value;

/// Outcome of folding: `NotConst` when the expression depends on runtime
/// state.
#[derive(Debug, Clone, PartialEq)]
pub enum Folded {
    Value(Value),
    NotConst,
    Error(String),
}

fn all(items: &[TExpr], cx: ConvCtx) -> Result<Option<Vec<Value>>, String> {
    let mut out = Vec::with_capacity(items.len());
    for e in items {
        match fold(e, cx) {
            Folded::Value(v) => out.push(v),
            Folded::NotConst => return Ok(None),
            Folded::Error(m) => return Err(m),
        }
    }
    Ok(Some(out))
}

pub fn fold(e: &TExpr, cx: ConvCtx) -> Folded {
    macro_rules! sub {
        ($x:expr) => {
            match fold($x, cx) {
                Folded::Value(v) => v,
                other => return other,
            }
        };
    }
    let lift = |r: Result<Value, String>| match r {
        Ok(v) => Folded::Value(v),
        Err(m) => Folded::Error(m),
    };
    if e.ty.is_error() {
        return Folded::NotConst;
    }
    match &e.kind {
        TExprKind::Const(v) => Folded::Value(v.clone()),
        TExprKind::Unary { op, operand } => {
            let v = sub!(operand);
            lift(ops::unary(*op, &v, &e.ty))
        }
        TExprKind::Binary { op, lhs, rhs } => {
            let l = sub!(lhs);
            // short-circuit keeps `false && f()` constant
            match (op, &l) {
                (crate::syntax::ast::BinOp::And, Value::Bool(false)) => return Folded::Value(Value::Bool(false)),
                (crate::syntax::ast::BinOp::Or, Value::Bool(true)) => return Folded::Value(Value::Bool(true)),
                _ => {}
            }
            let r = sub!(rhs);
            lift(ops::binary(*op, &l, &r, &e.ty))
        }
        TExprKind::Convert { operand, to } => {
            let v = sub!(operand);
            lift(convert(v, to, cx))
        }
        TExprKind::Cond { cond, then, els } => match sub!(cond) {
            Value::Bool(true) => fold(then, cx),
            Value::Bool(false) => fold(els, cx),
            _ => Folded::NotConst,
        },
        TExprKind::Collection { kind, elems } => match all(elems, cx) {
            Ok(Some(vs)) => Folded::Value(match kind {
                CollectionKind::Array => Value::Array(vs),
                CollectionKind::List => Value::List(vs),
                CollectionKind::Set => {
                    let mut out: Vec<Value> = Vec::new();
                    for v in vs {
                        if !out.contains(&v) {
                            out.push(v);
                        }
                    }
                    Value::Set(out)
                }
            }),
            Ok(None) => Folded::NotConst,
            Err(m) => Folded::Error(m),
        },
        TExprKind::TupleLit { ty, elems } => match all(elems, cx) {
            Ok(Some(vs)) => Folded::Value(Value::Tuple(*ty, vs)),
            Ok(None) => Folded::NotConst,
            Err(m) => Folded::Error(m),
        },
        TExprKind::RecordLit { ty, fields } => match all(fields, cx) {
            Ok(Some(vs)) => Folded::Value(Value::Record(*ty, vs)),
            Ok(None) => Folded::NotConst,
            Err(m) => Folded::Error(m),
        },
        TExprKind::MapLit { entries } => {
            let mut out: Vec<(Value, Value)> = Vec::new();
            for (k, v) in entries {
                let k = sub!(k);
                let v = sub!(v);
                match out.iter_mut().find(|(x, _)| *x == k) {
                    Some(slot) => slot.1 = v,
                    None => out.push((k, v)),
                }
            }
            Folded::Value(Value::Map(out))
        }
        TExprKind::Member { object, index } => match sub!(object) {
            Value::Tuple(_, vs) | Value::Record(_, vs) => {
                vs.get(*index).cloned().map(Folded::Value).unwrap_or(Folded::NotConst)
            }
            _ => Folded::NotConst,
        },
        _ => Folded::NotConst,
    }
}
