//! Operator semantics on runtime values, shared by constant folding and the
//! interpreter. Operands arrive already converted to their common type.

use crate::semantics::ir::UnaryOp;
use crate::syntax::ast::BinOp;
use crate::types::{IntKind, Type};
use crate::value::{check_int, Value};
use std::cmp::Ordering;

fn int_kind(ty: &Type) -> IntKind {
    match ty {
        Type::Int(k) => *k,
        _ => IntKind::I64,
    }
}

/// Reinterprets the low `bits` of `v` in `kind`.
fn wrap(v: i128, kind: IntKind) -> i128 {
    let bits = kind.bits();
    let mask = (1i128 << bits) - 1;
    let low = v & mask;
    if kind.signed() && low >= 1i128 << (bits - 1) {
        low - (1i128 << bits)
    } else {
        low
    }
}

fn compare(l: &Value, r: &Value) -> Option<Ordering> {
    match (l, r) {
        (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
        (Value::Timespan(a), Value::Timespan(b)) => Some(a.cmp(b)),
        (Value::Str(a), Value::Str(b)) => Some(a.cmp(b)),
        _ => l.as_f64()?.partial_cmp(&r.as_f64()?),
    }
}

fn mismatch(op: BinOp, l: &Value, r: &Value) -> String {
    format!(
        "operator `{}` cannot be applied to {} and {}",
        op.symbol(),
        l.kind_name(),
        r.kind_name()
    )
}

/// Applies a binary operator. `result` is the statically assigned type of
/// the operation and decides the admissible integer range.
pub fn binary(op: BinOp, l: &Value, r: &Value, result: &Type) -> Result<Value, String> {
    use BinOp::*;
    if op.is_comparison() {
        return Ok(Value::Bool(match op {
            Eq => l == r,
            Ne => l != r,
            _ => {
                let ord = compare(l, r).ok_or_else(|| mismatch(op, l, r))?;
                match op {
                    Lt => ord == Ordering::Less,
                    Le => ord != Ordering::Greater,
                    Gt => ord == Ordering::Greater,
                    _ => ord != Ordering::Less,
                }
            }
        }));
    }
    match (op, l, r) {
        (And, Value::Bool(a), Value::Bool(b)) => Ok(Value::Bool(*a && *b)),
        (Or, Value::Bool(a), Value::Bool(b)) => Ok(Value::Bool(*a || *b)),
        (Add, Value::Str(a), Value::Str(b)) => Ok(Value::Str(format!("{a}{b}"))),
        (Add, Value::Timespan(a), Value::Timespan(b)) => Ok(Value::Timespan(a + b)),
        (Sub, Value::Timespan(a), Value::Timespan(b)) => Ok(Value::Timespan(a - b)),
        (Div, _, _) => {
            let (a, b) = (
                l.as_f64().ok_or_else(|| mismatch(op, l, r))?,
                r.as_f64().ok_or_else(|| mismatch(op, l, r))?,
            );
            if b == 0.0 {
                return Err("division by zero".into());
            }
            Ok(Value::Double(a / b))
        }
        (Add | Sub | Mul | Mod | BitAnd | BitOr | BitXor, Value::Int(a), Value::Int(b)) => {
            let v = match op {
                Add => a.checked_add(*b),
                Sub => a.checked_sub(*b),
                Mul => a.checked_mul(*b),
                Mod => {
                    if *b == 0 {
                        return Err("division by zero in `%`".into());
                    }
                    Some(a % b)
                }
                BitAnd => Some(a & b),
                BitOr => Some(a | b),
                _ => Some(a ^ b),
            };
            let kind = int_kind(result);
            match v {
                Some(v) => check_int(v, kind),
                None => Err(format!("integer overflow in `{}` ({})", op.symbol(), kind.name())),
            }
        }
        (Shl | Shr, Value::Int(a), Value::Int(b)) => {
            let kind = int_kind(result);
            if *b < 0 || *b >= kind.bits() as i128 {
                return Err(format!("shift amount {b} out of range for {}", kind.name()));
            }
            let v = if op == Shl { wrap(a << b, kind) } else { a >> b };
            Ok(Value::Int(v))
        }
        (Add | Sub | Mul, Value::Float(a), Value::Float(b)) => Ok(Value::Float(match op {
            Add => a + b,
            Sub => a - b,
            _ => a * b,
        })),
        (Add | Sub | Mul, Value::Double(a), Value::Double(b)) => Ok(Value::Double(match op {
            Add => a + b,
            Sub => a - b,
            _ => a * b,
        })),
        _ => Err(mismatch(op, l, r)),
    }
}

pub fn unary(op: UnaryOp, v: &Value, result: &Type) -> Result<Value, String> {
    match (op, v) {
        (UnaryOp::Neg, Value::Int(i)) => check_int(-i, int_kind(result)),
        (UnaryOp::Neg, Value::Float(f)) => Ok(Value::Float(-f)),
        (UnaryOp::Neg, Value::Double(d)) => Ok(Value::Double(-d)),
        (UnaryOp::Neg, Value::Timespan(d)) => Ok(Value::Timespan(-d)),
        (UnaryOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
        (UnaryOp::BitNot, Value::Int(i)) => Ok(Value::Int(wrap(!i, int_kind(result)))),
        _ => Err(format!("unary operator cannot be applied to {}", v.kind_name())),
    }
}

/// `x + delta` for `++`/`--`.
pub fn step(v: &Value, delta: i8, ty: &Type) -> Result<Value, String> {
    match v {
        Value::Int(i) => check_int(i + delta as i128, int_kind(ty)),
        Value::Float(f) => Ok(Value::Float(f + delta as f32)),
        Value::Double(d) => Ok(Value::Double(d + delta as f64)),
        _ => Err(format!("cannot increment a {} value", v.kind_name())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn division_is_double() {
        let r = binary(BinOp::Div, &Value::Double(3.0), &Value::Double(2.0), &Type::Double);
        assert_eq!(r, Ok(Value::Double(1.5)));
        assert!(binary(BinOp::Div, &Value::Double(1.0), &Value::Double(0.0), &Type::Double).is_err());
    }

    #[test]
    fn overflow_is_an_error() {
        let t = Type::Int(IntKind::I8);
        assert!(binary(BinOp::Add, &Value::Int(127), &Value::Int(1), &t).is_err());
        assert_eq!(binary(BinOp::Add, &Value::Int(126), &Value::Int(1), &t), Ok(Value::Int(127)));
    }

    #[test]
    fn bit_ops_respect_width() {
        let u8t = Type::Int(IntKind::U8);
        assert_eq!(unary(UnaryOp::BitNot, &Value::Int(0), &u8t), Ok(Value::Int(255)));
        assert_eq!(
            binary(BinOp::Shl, &Value::Int(0x81), &Value::Int(1), &u8t),
            Ok(Value::Int(2))
        );
        let i8t = Type::Int(IntKind::I8);
        assert_eq!(unary(UnaryOp::BitNot, &Value::Int(0), &i8t), Ok(Value::Int(-1)));
        assert_eq!(binary(BinOp::Shr, &Value::Int(-8), &Value::Int(1), &i8t), Ok(Value::Int(-4)));
    }

    #[test]
    fn timespan_comparison() {
        use rust_decimal::Decimal;
        let r = binary(
            BinOp::Lt,
            &Value::Timespan(Decimal::from(100)),
            &Value::Timespan(Decimal::from(3000)),
            &Type::Bool,
        );
        assert_eq!(r, Ok(Value::Bool(true)));
    }

    proptest! {
        #[test]
        fn i64_arithmetic_matches_checked_ops(a in any::<i64>(), b in any::<i64>()) {
            let t = Type::Int(IntKind::I64);
            let got = binary(BinOp::Add, &Value::Int(a as i128), &Value::Int(b as i128), &t).ok();
            prop_assert_eq!(got, a.checked_add(b).map(|v| Value::Int(v as i128)));
            let got = binary(BinOp::Mul, &Value::Int(a as i128), &Value::Int(b as i128), &t).ok();
            prop_assert_eq!(got, a.checked_mul(b).map(|v| Value::Int(v as i128)));
        }
    }
}
