//! Value conversion, used for both implicit coercions and `as` casts.

use super::timespan::{decimal_to_f64, f64_to_decimal, from_units, to_units};
use super::ty::{IntKind, Type, TypeDef, TypeRegistry};
use crate::value::{check_int, Value};
use rust_decimal::prelude::ToPrimitive;
use rust_decimal::Decimal;

/// What a conversion needs besides the value: type definitions and the
/// length of one simulation time unit.
#[derive(Clone, Copy)]
pub struct ConvCtx<'a> {
    pub reg: &'a TypeRegistry,
    pub unit_ms: Decimal,
}

fn float_to_int(x: f64, kind: IntKind) -> Result<Value, String> {
    if !x.is_finite() {
        return Err(format!("cannot convert {x} to {}", kind.name()));
    }
    let t = x.trunc();
    if t < kind.min() as f64 || t > kind.max() as f64 {
        return Err(format!("conversion overflow: {x} does not fit in {}", kind.name()));
    }
    check_int(t as i128, kind)
}

fn decimal_to_int(d: Decimal, kind: IntKind) -> Result<Value, String> {
    let t = d.trunc();
    match t.to_i128() {
        Some(v) if kind.contains(v) => Ok(Value::Int(v)),
        _ => Err(format!("conversion overflow: {d} does not fit in {}", kind.name())),
    }
}

fn convert_all(items: Vec<Value>, to: &Type, cx: ConvCtx) -> Result<Vec<Value>, String> {
    items.into_iter().map(|v| convert(v, to, cx)).collect()
}

fn dedup(items: Vec<Value>) -> Vec<Value> {
    let mut out: Vec<Value> = Vec::with_capacity(items.len());
    for v in items {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Converts `v` to type `to`. Narrowing truncates toward zero and fails when
/// the result is out of range.
pub fn convert(v: Value, to: &Type, cx: ConvCtx) -> Result<Value, String> {
    let reg = cx.reg;
    match (v, to) {
        (v, Type::Any | Type::Error) => Ok(v),
        (Value::Int(i), Type::Int(k)) => check_int(i, *k),
        (Value::Int(i), Type::Float) => Ok(Value::Float(i as f32)),
        (Value::Int(i), Type::Double) => Ok(Value::Double(i as f64)),
        (Value::Float(f), Type::Int(k)) => float_to_int(f as f64, *k),
        (Value::Double(d), Type::Int(k)) => float_to_int(d, *k),
        (Value::Float(f), Type::Float) => Ok(Value::Float(f)),
        (Value::Float(f), Type::Double) => Ok(Value::Double(f as f64)),
        (Value::Double(d), Type::Float) => Ok(Value::Float(d as f32)),
        (Value::Double(d), Type::Double) => Ok(Value::Double(d)),
        (Value::Int(i), Type::Timespan) => Ok(Value::Timespan(from_units(Decimal::from(i as i64), cx.unit_ms))),
        (Value::Float(f), Type::Timespan) => num_to_timespan(f as f64, cx),
        (Value::Double(d), Type::Timespan) => num_to_timespan(d, cx),
        (Value::Timespan(ms), Type::Timespan) => Ok(Value::Timespan(ms)),
        (Value::Timespan(ms), Type::Double) => Ok(Value::Double(decimal_to_f64(to_units(ms, cx.unit_ms)))),
        (Value::Timespan(ms), Type::Float) => Ok(Value::Float(decimal_to_f64(to_units(ms, cx.unit_ms)) as f32)),
        (Value::Timespan(ms), Type::Int(k)) => decimal_to_int(to_units(ms, cx.unit_ms), *k),
        (Value::Enum(_, code), Type::Int(k)) => check_int(code as i128, *k),
        (Value::Int(i), Type::Named(id)) if reg.enum_def(*id).is_some() => {
            let e = reg.enum_def(*id).unwrap();
            match i64::try_from(i).ok().filter(|c| e.name_of(*c).is_some()) {
                Some(c) => Ok(Value::Enum(*id, c)),
                None => Err(format!("{i} is not a value of enum {}", e.name)),
            }
        }
        (Value::Enum(from, code), Type::Named(id)) if from == *id => Ok(Value::Enum(from, code)),
        (Value::Char(c), Type::Str) => Ok(Value::Str(c.to_string())),
        (Value::Char(c), Type::Char) => Ok(Value::Char(c)),
        (Value::Str(s), Type::Str) => Ok(Value::Str(s)),
        (Value::Bool(b), Type::Bool) => Ok(Value::Bool(b)),
        (Value::Null, t) if super::relations::is_reference(t, reg) => Ok(Value::Null),
        (v @ Value::Actor(_), Type::ActorRef | Type::ConnectionRef) => Ok(v),
        (v @ Value::Actor(_), t) if reg.class_kind(t).is_some() => Ok(v),
        (v @ Value::Object(_), Type::ObjectRef) => Ok(v),
        (v @ Value::Object(_), t) if reg.class_kind(t).is_some() => Ok(v),
        (Value::Array(xs) | Value::List(xs) | Value::Set(xs), Type::Array(e, n)) => {
            if let Some(n) = n {
                if xs.len() as u64 != *n {
                    return Err(format!("array of length {} does not fit array{{_,{n}}}", xs.len()));
                }
            }
            Ok(Value::Array(convert_all(xs, e, cx)?))
        }
        (Value::Array(xs) | Value::List(xs) | Value::Set(xs), Type::List(e)) => {
            Ok(Value::List(convert_all(xs, e, cx)?))
        }
        (Value::Array(xs) | Value::List(xs) | Value::Set(xs), Type::Set(e)) => {
            Ok(Value::Set(dedup(convert_all(xs, e, cx)?)))
        }
        (Value::Map(entries), Type::Map(k, val)) => {
            let mut out = Vec::with_capacity(entries.len());
            for (a, b) in entries {
                out.push((convert(a, k, cx)?, convert(b, val, cx)?));
            }
            Ok(Value::Map(out))
        }
        (Value::Tuple(_, xs) | Value::Record(_, xs), t) if reg.positional(t).is_some() => {
            let types = reg.positional(t).unwrap();
            if types.len() != xs.len() {
                return Err(format!(
                    "{} values do not fit {}",
                    xs.len(),
                    reg.display(t)
                ));
            }
            let vals: Result<Vec<Value>, String> =
                xs.into_iter().zip(&types).map(|(x, ty)| convert(x, ty, cx)).collect();
            let vals = vals?;
            Ok(match t {
                Type::Named(id) => match reg.get(*id) {
                    TypeDef::Record { .. } => Value::Record(*id, vals),
                    _ => Value::Tuple(Some(*id), vals),
                },
                _ => Value::Tuple(None, vals),
            })
        }
        (v, t) => Err(format!("cannot convert {} value to {}", v.kind_name(), reg.display(t))),
    }
}

fn num_to_timespan(x: f64, cx: ConvCtx) -> Result<Value, String> {
    f64_to_decimal(x)
        .map(|d| Value::Timespan(from_units(d, cx.unit_ms)))
        .ok_or_else(|| format!("cannot convert {x} to timespan"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ty::EnumDef;
    use proptest::prelude::*;

    fn cx(reg: &TypeRegistry) -> ConvCtx<'_> {
        ConvCtx { reg, unit_ms: Decimal::ONE }
    }

    #[test]
    fn narrowing_truncates_toward_zero() {
        let reg = TypeRegistry::new();
        assert_eq!(convert(Value::Double(3.9), &Type::Int(IntKind::I32), cx(&reg)), Ok(Value::Int(3)));
        assert_eq!(convert(Value::Double(-3.9), &Type::Int(IntKind::I32), cx(&reg)), Ok(Value::Int(-3)));
        assert!(convert(Value::Double(300.0), &Type::Int(IntKind::I8), cx(&reg)).is_err());
        assert!(convert(Value::Int(-1), &Type::Int(IntKind::U8), cx(&reg)).is_err());
        assert!(convert(Value::Double(f64::NAN), &Type::Int(IntKind::I64), cx(&reg)).is_err());
    }

    #[test]
    fn timespan_scaling() {
        let reg = TypeRegistry::new();
        let c = ConvCtx { reg: &reg, unit_ms: Decimal::from(1000) };
        assert_eq!(
            convert(Value::Timespan(Decimal::from(10)), &Type::Double, c),
            Ok(Value::Double(0.01))
        );
        assert_eq!(
            convert(Value::Double(2.5), &Type::Timespan, c),
            Ok(Value::Timespan(Decimal::from(2500)))
        );
        assert_eq!(
            convert(Value::Timespan(Decimal::from(2500)), &Type::Int(IntKind::I64), c),
            Ok(Value::Int(2))
        );
    }

    #[test]
    fn enum_codes() {
        let mut reg = TypeRegistry::new();
        let id = reg.register(TypeDef::Enum(EnumDef {
            name: "E".into(),
            items: vec![("A".into(), 0), ("B".into(), 5)],
        }));
        let t = Type::Named(id);
        assert_eq!(convert(Value::Int(5), &t, cx(&reg)), Ok(Value::Enum(id, 5)));
        assert!(convert(Value::Int(1), &t, cx(&reg)).is_err());
        assert_eq!(convert(Value::Enum(id, 5), &Type::Int(IntKind::I64), cx(&reg)), Ok(Value::Int(5)));
    }

    #[test]
    fn tuple_to_record() {
        let mut reg = TypeRegistry::new();
        let id = reg.register(TypeDef::Record {
            name: "Person".into(),
            fields: vec![("name".into(), Type::Str), ("age".into(), Type::Int(IntKind::I64))],
        });
        let v = Value::Tuple(None, vec![Value::Str("Joe".into()), Value::Int(45)]);
        assert_eq!(
            convert(v, &Type::Named(id), cx(&reg)),
            Ok(Value::Record(id, vec![Value::Str("Joe".into()), Value::Int(45)]))
        );
    }

    #[test]
    fn sized_arrays() {
        let reg = TypeRegistry::new();
        let t = Type::Array(Box::new(Type::Double), Some(2));
        assert_eq!(
            convert(Value::Array(vec![Value::Int(1), Value::Int(2)]), &t, cx(&reg)),
            Ok(Value::Array(vec![Value::Double(1.0), Value::Double(2.0)]))
        );
        assert!(convert(Value::Array(vec![Value::Int(1)]), &t, cx(&reg)).is_err());
    }

    proptest! {
        #[test]
        fn widening_round_trips(v in any::<i32>()) {
            let reg = TypeRegistry::new();
            let wide = convert(Value::Int(v as i128), &Type::Int(IntKind::I64), cx(&reg)).unwrap();
            let back = convert(wide, &Type::Int(IntKind::I32), cx(&reg)).unwrap();
            prop_assert_eq!(back, Value::Int(v as i128));
        }

        #[test]
        fn enum_round_trip(code in prop::sample::select(vec![0i64, 5])) {
            let mut reg = TypeRegistry::new();
            let id = reg.register(TypeDef::Enum(EnumDef {
                name: "E".into(),
                items: vec![("A".into(), 0), ("B".into(), 5)],
            }));
            let e = convert(Value::Int(code as i128), &Type::Named(id), cx(&reg)).unwrap();
            let back = convert(e, &Type::Int(IntKind::I64), cx(&reg)).unwrap();
            prop_assert_eq!(back, Value::Int(code as i128));
        }

        #[test]
        fn double_to_int_truncates(x in -1.0e9f64..1.0e9) {
            let reg = TypeRegistry::new();
            let v = convert(Value::Double(x), &Type::Int(IntKind::I64), cx(&reg)).unwrap();
            prop_assert_eq!(v, Value::Int(x.trunc() as i128));
        }
    }
}
